"""Shared oracles and dataset builders for the test suite.

The oracles here are independent of the code paths they check: cell
parameters are derived by enumerating the latent strata of the benchmark
generator, and the employment-study parameters come from the published
cell table, entered as plain constants.
"""

import numpy as np

from brokenrct.identify import CellParams

# Employment-study cell values per follow-up year, cells keyed (z, d):
# survival = employment proportion, mean_y = mean log-earnings of the employed.
STUDY_TAKE = {1: 0.888, 0: 0.606}
STUDY_ARMS = {1: 5577, 0: 3663}
STUDY_CELLS = {
    1: {"survival": {(1, 1): 0.480, (1, 0): 0.574, (0, 1): 0.543, (0, 0): 0.601},
        "mean": {(1, 1): 4.824, (1, 0): 5.090, (0, 1): 4.803, (0, 0): 5.041}},
    2: {"survival": {(1, 1): 0.749, (1, 0): 0.772, (0, 1): 0.745, (0, 0): 0.766},
        "mean": {(1, 1): 4.723, (1, 0): 4.841, (0, 1): 4.661, (0, 0): 4.868}},
    3: {"survival": {(1, 1): 0.838, (1, 0): 0.812, (0, 1): 0.807, (0, 0): 0.824},
        "mean": {(1, 1): 5.023, (1, 0): 4.964, (0, 1): 4.924, (0, 0): 5.009}},
    4: {"survival": {(1, 1): 0.840, (1, 0): 0.815, (0, 1): 0.827, (0, 0): 0.792},
        "mean": {(1, 1): 5.207, (1, 0): 5.128, (0, 1): 5.160, (0, 0): 5.168}},
}


def study_params(year: int) -> CellParams:
    cells = STUDY_CELLS[year]
    survival = np.zeros((2, 2))
    mean = np.zeros((2, 2))
    for (z, d), v in cells["survival"].items():
        survival[z, d] = v
    for (z, d), v in cells["mean"].items():
        mean[z, d] = v
    return CellParams(take=np.array([STUDY_TAKE[0], STUDY_TAKE[1]]),
                      survival=survival, mean_y=mean)


def case1_params_oracle() -> CellParams:
    """Benchmark-case-1 cell parameters by enumerating the latent strata.

    Strata shares 0.3 / 0.28 / 0.42 (always / complier / never); survival
    probabilities per stratum from the two linear survival rules; outcome
    means 1 + d for every stratum.  This recomputes the parameters from
    first principles rather than through any library code.
    """
    p_a, p_c, p_n = 0.3, 0.28, 0.42
    s1 = {"a": 0.9, "c": 0.6, "n": 0.3}
    s0 = {"a": 0.7, "c": 0.5, "n": 0.3}
    take1 = p_a + p_c
    take0 = p_a
    survival = np.zeros((2, 2))
    survival[1, 1] = (p_a * s1["a"] + p_c * s1["c"]) / (p_a + p_c)
    survival[1, 0] = s0["n"]
    survival[0, 1] = s1["a"]
    survival[0, 0] = (p_c * s0["c"] + p_n * s0["n"]) / (p_c + p_n)
    mean = np.array([[1.0, 2.0], [1.0, 2.0]])
    return CellParams(take=np.array([take0, take1]), survival=survival, mean_y=mean)


def two_point_outcomes(k: int, mean: float) -> np.ndarray:
    """k values with sample mean exactly `mean` and positive spread."""
    half = k // 2
    values = [mean - 0.5] * half + [mean + 0.5] * half
    if k % 2:
        values.append(mean)
    return np.asarray(values)


def build_study_dataset(year: int, scale: float = 1.0) -> np.ndarray:
    """Synthetic (n, 6) dataset matching the study's cell proportions.

    Counts are the published arm sizes (times `scale`) split by the
    published uptake and employment proportions, rounded to integers;
    outcomes are two-point spreads around the published cell means, so the
    ingested cell statistics reproduce the table up to rounding.
    """
    cells = STUDY_CELLS[year]
    rows = []
    for z in (0, 1):
        n_arm = int(round(STUDY_ARMS[z] * scale))
        n_treated = int(round(STUDY_TAKE[z] * n_arm))
        for d, n_cell in ((1, n_treated), (0, n_arm - n_treated)):
            n_surv = int(round(cells["survival"][z, d] * n_cell))
            outcomes = two_point_outcomes(n_surv, cells["mean"][z, d])
            for y in outcomes:
                rows.append((z, d, 1, 1, 1, y))
            for _ in range(n_cell - n_surv):
                rows.append((z, d, 1, 0, 1, np.nan))
    return np.asarray(rows, dtype=float)


def delete_outcomes_mcar(arr: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Set a random fraction of observed outcomes to missing."""
    rng = np.random.default_rng(seed)
    out = arr.copy()
    observed = np.flatnonzero((out[:, 3] == 1) & (out[:, 4] == 1))
    drop = rng.choice(observed, size=int(fraction * observed.size), replace=False)
    out[drop, 4] = 0.0
    out[drop, 5] = np.nan
    return out


def delete_survival_mcar(arr: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Set a random fraction of survival statuses (and outcomes) to missing."""
    rng = np.random.default_rng(seed)
    out = arr.copy()
    idx = rng.choice(out.shape[0], size=int(fraction * out.shape[0]), replace=False)
    out[idx, 2] = 0.0
    out[idx, 3] = np.nan
    out[idx, 4] = 0.0
    out[idx, 5] = np.nan
    return out


def population_stratum_table():
    """A finite synthetic population over all eight strata.

    Returns (rows, truth) where each row is (share, kind, survival info,
    outcome means) sufficient to compute exact cell parameters, and truth is
    the survived-complier contrast.  Mean outcomes satisfy the ignorability
    constraints: Y(1) means agree across surviving-compliers and protected
    compliers, Y(0) means across surviving and harmed compliers.
    """
    p_a, p_c, p_n = 0.25, 0.4, 0.35
    surv1_a = 0.8          # P(S(1)=1 | always-taker)
    surv0_n = 0.55         # P(S(0)=1 | never-taker)
    # complier joint survival split over (S(1), S(0)): cl, cp, ch, cd
    joint_c = {"cl": 0.35, "cp": 0.25, "ch": 0.2, "cd": 0.2}
    mean_y1_c = 2.5        # E[Y(1) | complier, S(1)=1] (= cl = cp)
    mean_y0_c = 1.75       # E[Y(0) | complier, S(0)=1] (= cl = ch)
    mean_y1_a = 3.25       # E[Y(1) | always-taker survivor]
    mean_y0_n = 0.5        # E[Y(0) | never-taker survivor]
    return {
        "p": (p_a, p_c, p_n),
        "surv1_a": surv1_a,
        "surv0_n": surv0_n,
        "joint_c": joint_c,
        "means": (mean_y1_c, mean_y0_c, mean_y1_a, mean_y0_n),
        "truth": mean_y1_c - mean_y0_c,
    }


def population_params() -> tuple[CellParams, float]:
    """Exact cell parameters of the synthetic population and the true effect."""
    pop = population_stratum_table()
    p_a, p_c, p_n = pop["p"]
    joint = pop["joint_c"]
    s1_c = joint["cl"] + joint["cp"]
    s0_c = joint["cl"] + joint["ch"]
    mean_y1_c, mean_y0_c, mean_y1_a, mean_y0_n = pop["means"]

    take = np.array([p_a, p_a + p_c])
    survival = np.zeros((2, 2))
    survival[1, 1] = (p_a * pop["surv1_a"] + p_c * s1_c) / (p_a + p_c)
    survival[1, 0] = pop["surv0_n"]
    survival[0, 1] = pop["surv1_a"]
    survival[0, 0] = (p_c * s0_c + p_n * pop["surv0_n"]) / (p_c + p_n)
    mean = np.zeros((2, 2))
    mean[1, 1] = ((p_a * pop["surv1_a"] * mean_y1_a + p_c * s1_c * mean_y1_c)
                  / (p_a * pop["surv1_a"] + p_c * s1_c))
    mean[1, 0] = mean_y0_n
    mean[0, 1] = mean_y1_a
    mean[0, 0] = ((p_c * s0_c * mean_y0_c + p_n * pop["surv0_n"] * mean_y0_n)
                  / (p_c * s0_c + p_n * pop["surv0_n"]))
    return CellParams(take=take, survival=survival, mean_y=mean), pop["truth"]
