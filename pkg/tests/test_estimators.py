import numpy as np
import pytest

from brokenrct.comparators import itt_at_pp, tsls_survivors
from brokenrct.estimation import estimate_pace, fit_cell_params
from brokenrct.estimators import PaceEstimator, SurvivorContrast, TwoStageLeastSquares
from brokenrct.records import ingest, records_from_array
from brokenrct.simulate import DgpConfig, generate

from helpers import delete_outcomes_mcar


@pytest.fixture(scope="module")
def sample():
    arr, _ = generate(DgpConfig(n=4000, case=1), seed=71)
    return arr


class TestParamProtocol:
    def test_get_set_round_trip(self):
        est = PaceEstimator(level=0.9, scale="identity", impute=None, seed=3)
        params = est.get_params()
        assert params["level"] == 0.9 and params["seed"] == 3
        est.set_params(level=0.99, seed=5)
        assert est.level == 0.99 and est.seed == 5
        with pytest.raises(ValueError):
            est.set_params(bogus=1)

    def test_sklearn_clone_compatible(self):
        sklearn_base = pytest.importorskip("sklearn.base")
        est = PaceEstimator(level=0.9, impute=4, seed=12)
        cloned = sklearn_base.clone(est)
        assert cloned is not est
        assert cloned.get_params() == est.get_params()
        for cls in (TwoStageLeastSquares, SurvivorContrast):
            assert sklearn_base.clone(cls()).get_params() == cls().get_params()

    def test_repr_shows_params(self):
        assert "level=0.9" in repr(PaceEstimator(level=0.9))


class TestPaceEstimatorFit:
    def test_matches_functional_api(self, sample):
        est = PaceEstimator().fit(sample)
        params, cov = fit_cell_params(ingest(sample))
        expected = estimate_pace(params, cov, n=sample.shape[0])
        assert est.tau_ == expected.tau
        assert est.se_ == expected.se_tau
        assert est.conf_int_ == expected.ci
        assert est.estimate_.mu1 == expected.mu1
        assert est.strata_proportions_.p_c > 0
        assert est.validation_.ok

    def test_accepts_records_and_frames(self, sample):
        pd = pytest.importorskip("pandas")
        base = PaceEstimator().fit(sample).tau_
        as_records = PaceEstimator().fit(records_from_array(sample)).tau_
        frame = pd.DataFrame(sample, columns=["z", "d", "delta_s", "s", "delta_y", "y"])
        as_frame = PaceEstimator().fit(frame).tau_
        assert base == as_records == as_frame

    def test_unfitted_access_raises(self):
        with pytest.raises(RuntimeError):
            PaceEstimator().tau_

    def test_invalid_scale(self, sample):
        with pytest.raises(ValueError):
            PaceEstimator(scale="odds").fit(sample)

    def test_imputed_fit_is_deterministic(self, sample):
        damaged = delete_outcomes_mcar(sample, 0.2, seed=8)
        a = PaceEstimator(impute=5, seed=42).fit(damaged)
        b = PaceEstimator(impute=5, seed=42).fit(damaged)
        assert a.pooled_ is not None
        assert a.tau_ == b.tau_ and a.se_ == b.se_
        assert a.se_ > 0
        c = PaceEstimator(impute=5, seed=43).fit(damaged)
        assert c.tau_ != a.tau_

    def test_logit_scale_on_binary_outcomes(self, sample):
        arr = sample.copy()
        keep = arr[:, 3] == 1
        rng = np.random.default_rng(17)
        arr[keep, 5] = (rng.random(keep.sum()) < (0.5 + 0.25 * arr[keep, 1])).astype(float)
        est = PaceEstimator(scale="logit").fit(arr)
        assert est.estimate_.scale == "logit"
        assert np.isfinite(est.tau_)


class TestComparatorWrappers:
    def test_tsls_wrapper(self, sample):
        est = TwoStageLeastSquares(level=0.9).fit(sample)
        expected = tsls_survivors(sample, level=0.9)
        assert est.tau_ == expected.tau
        assert est.se_ == expected.se
        assert est.conf_int_ == expected.ci

    @pytest.mark.parametrize("method", ["itt", "at", "pp"])
    def test_contrast_wrapper(self, sample, method):
        est = SurvivorContrast(method=method).fit(sample)
        expected = itt_at_pp(sample, method)
        assert est.tau_ == expected.tau
        assert est.se_ == expected.se
