"""Reference estimators: survivor-restricted 2SLS and naive contrasts.

These are the benchmarks the main estimator is compared against.  All of
them are computed on the survivor subsample with observed outcomes and are
conventions, not identification results: they ignore the uncertainty in who
survives, which is exactly why their intervals look tighter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DenominatorDegenerateError, EmptyCellError
from .estimation import normal_quantile, two_sided_p
from .records import as_array

METHODS = ("tsls", "itt", "at", "pp")


@dataclass(frozen=True)
class ComparatorEstimate:
    method: str
    tau: float
    se: float
    ci_lower: float
    ci_upper: float
    level: float
    p_value: float
    n_used: int

    @property
    def ci(self) -> tuple[float, float]:
        return (self.ci_lower, self.ci_upper)


def _survivor_outcome_view(records):
    """(z, d, y) among survivors with an observed outcome, plus full (z, d)."""
    arr = records if isinstance(records, np.ndarray) else as_array(records)
    z, d = arr[:, 0], arr[:, 1]
    keep = (arr[:, 2] == 1) & (arr[:, 3] == 1) & (arr[:, 4] == 1)
    return z[keep], d[keep], arr[keep, 5], z, d


def tsls_survivors(records, level: float = 0.95) -> ComparatorEstimate:
    """Just-identified IV (Wald) ratio computed within observed survivors.

    The assignment instruments the received treatment on the survivor
    subsample; the standard error is the heteroskedasticity-robust sandwich
    for the just-identified case.
    """
    z, d, y, *_ = _survivor_outcome_view(records)
    n = z.size
    if n == 0 or z.min() == z.max():
        raise EmptyCellError("both assignment arms must appear among observed survivors")
    zc = z - z.mean()
    dc = d - d.mean()
    yc = y - y.mean()
    first_stage = float(np.dot(zc, dc))
    if first_stage == 0.0:
        raise DenominatorDegenerateError("zero first stage among survivors")
    tau = float(np.dot(zc, yc)) / first_stage
    alpha = y.mean() - tau * d.mean()
    resid = y - alpha - tau * d
    variance = float(np.sum((zc * resid) ** 2)) / first_stage**2
    return _wrap("tsls", tau, math.sqrt(variance), level, n)


def itt_at_pp(records, method: str, level: float = 0.95) -> ComparatorEstimate:
    """Survivor-restricted mean contrasts by assignment, treatment or protocol.

    itt: difference by assignment; at: difference by received treatment;
    pp: difference by assignment among protocol-followers (z = d).  Standard
    errors are the unpooled two-sample normal formula.
    """
    method = method.lower()
    if method not in ("itt", "at", "pp"):
        raise ValueError(f"method must be itt, at or pp, got {method!r}")
    z, d, y, *_ = _survivor_outcome_view(records)
    if method == "itt":
        group = z
    elif method == "at":
        group = d
    else:
        keep = z == d
        z, y = z[keep], y[keep]
        group = z
    y1, y0 = y[group == 1], y[group == 0]
    if y1.size == 0 or y0.size == 0:
        raise EmptyCellError(f"{method}: empty comparison group among observed survivors")
    tau = float(y1.mean() - y0.mean())
    var1 = float(y1.var(ddof=1)) if y1.size > 1 else 0.0
    var0 = float(y0.var(ddof=1)) if y0.size > 1 else 0.0
    se = math.sqrt(var1 / y1.size + var0 / y0.size)
    return _wrap(method, tau, se, level, int(y1.size + y0.size))


def _wrap(method, tau, se, level, n) -> ComparatorEstimate:
    zq = normal_quantile(0.5 + level / 2.0)
    return ComparatorEstimate(
        method=method, tau=tau, se=se,
        ci_lower=tau - zq * se, ci_upper=tau + zq * se,
        level=level, p_value=two_sided_p(tau, se), n_used=n,
    )
