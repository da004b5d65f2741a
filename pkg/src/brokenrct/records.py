"""Observation records, principal-stratum taxonomy and cell statistics.

A study record carries the assignment Z, the received treatment D, the
survival indicator S (observed when ``delta_s = 1``) and the outcome Y
(observed when ``delta_y = 1`` and the subject survived).  The outcome is
undefined, not merely unobserved, for non-survivors.  Everything downstream
consumes :class:`CellStatistics`, the sufficient statistics of the data:
counts and complete-case means/variances per (z, d) cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRecordError, SchemaError, WeakInstrumentWarning

COLUMNS = ("z", "d", "delta_s", "s", "delta_y", "y")

#: Default threshold on |P(D=1|Z=1) - P(D=1|Z=0)| below which the assignment
#: is flagged as a weak instrument.
WEAK_INSTRUMENT_THRESHOLD = 0.02


@dataclass(frozen=True)
class ObservationRecord:
    """One subject's observed tuple (z, d, delta_s, s, delta_y, y)."""

    z: int
    d: int
    delta_s: int
    s: int | None
    delta_y: int
    y: float | None

    def validate(self, index: int = -1) -> None:
        for name in ("z", "d", "delta_s", "delta_y"):
            if getattr(self, name) not in (0, 1):
                raise InvalidRecordError(index, f"{name} must be 0 or 1")
        if self.delta_s == 0:
            if self.s is not None:
                raise InvalidRecordError(index, "s must be absent when delta_s = 0")
            if self.delta_y != 0:
                raise InvalidRecordError(index, "delta_y must be 0 when delta_s = 0")
        else:
            if self.s not in (0, 1):
                raise InvalidRecordError(index, "s must be 0 or 1 when delta_s = 1")
        survived = self.delta_s == 1 and self.s == 1
        if self.delta_y == 1 and survived:
            if self.y is None or not math.isfinite(self.y):
                raise InvalidRecordError(index, "y must be a finite number when delta_y = 1 and s = 1")
        elif self.y is not None:
            raise InvalidRecordError(index, "y must be absent unless delta_y = 1 and s = 1")


@dataclass(frozen=True)
class PrincipalStratum:
    """A row of the compliance-by-survival stratum taxonomy.

    ``d1``/``d0`` are the potential treatments; ``s1``/``s0`` the potential
    survival statuses, ``None`` where undefined for the stratum.
    """

    label: str
    d1: int
    d0: int
    s1: int | None
    s0: int | None
    description: str


#: The eight strata: no defiers, and survival defined only under the arm(s)
#: the stratum can actually receive.
STRATA = (
    PrincipalStratum("al", 1, 1, 1, None, "survived always-takers"),
    PrincipalStratum("ad", 1, 1, 0, None, "dead always-takers"),
    PrincipalStratum("cl", 1, 0, 1, 1, "survived compliers"),
    PrincipalStratum("cp", 1, 0, 1, 0, "protected compliers"),
    PrincipalStratum("ch", 1, 0, 0, 1, "harmed compliers"),
    PrincipalStratum("cd", 1, 0, 0, 0, "doomed compliers"),
    PrincipalStratum("nl", 0, 0, None, 1, "survived never-takers"),
    PrincipalStratum("nd", 0, 0, None, 0, "dead never-takers"),
)

STRATUM_BY_LABEL = {stratum.label: stratum for stratum in STRATA}


@dataclass
class CellStatistics:
    """Counts and complete-case moments per (z, d) cell.

    Arrays are indexed ``[z, d]``.  Outcome moments cover survivors with an
    observed outcome only; survival proportions cover records with an
    observed survival status only (the missing-at-random contract).
    """

    count: np.ndarray          # all records per (z, d)
    surv_obs: np.ndarray       # records with delta_s = 1
    surv_pos: np.ndarray       # records with delta_s = 1 and s = 1
    miss_s: np.ndarray         # records with delta_s = 0
    y_count: np.ndarray        # survivors with delta_y = 1
    y_mean: np.ndarray         # complete-case outcome mean (0.0 if no data)
    y_m2: np.ndarray           # sum of squared deviations around y_mean

    @property
    def n_records(self) -> int:
        return int(self.count.sum())

    def n(self, z: int, d: int, s: int) -> int:
        """Count of records with an observed survival status s in cell (z, d)."""
        pos = int(self.surv_pos[z, d])
        return pos if s == 1 else int(self.surv_obs[z, d]) - pos

    def n_missing_s(self, z: int, d: int) -> int:
        return int(self.miss_s[z, d])

    def survival_rate(self, z: int, d: int) -> float:
        """Observed-survival proportion in cell (z, d); nan if never observed."""
        obs = self.surv_obs[z, d]
        if obs == 0:
            return float("nan")
        return float(self.surv_pos[z, d] / obs)

    def y_var(self, z: int, d: int) -> float:
        """Unbiased sample variance of observed outcomes in (z, d, s=1)."""
        k = self.y_count[z, d]
        if k == 0:
            return float("nan")
        if k == 1:
            return 0.0
        return float(self.y_m2[z, d] / (k - 1))

    def arm_count(self, z: int) -> int:
        return int(self.count[z].sum())

    def take_rate(self, z: int) -> float:
        total = self.count[z].sum()
        if total == 0:
            return float("nan")
        return float(self.count[z, 1] / total)

    def merge(self, other: "CellStatistics") -> "CellStatistics":
        """Combine two disjoint batches (associative up to float rounding)."""
        ka, kb = self.y_count, other.y_count
        k = ka + kb
        delta = other.y_mean - self.y_mean
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(k > 0, self.y_mean + delta * np.divide(kb, np.maximum(k, 1)), 0.0)
            m2 = self.y_m2 + other.y_m2 + delta**2 * np.divide(ka * kb, np.maximum(k, 1))
        return CellStatistics(
            count=self.count + other.count,
            surv_obs=self.surv_obs + other.surv_obs,
            surv_pos=self.surv_pos + other.surv_pos,
            miss_s=self.miss_s + other.miss_s,
            y_count=k,
            y_mean=mean,
            y_m2=m2,
        )


def ingest(records) -> CellStatistics:
    """Reduce records to cell statistics.

    Validates every record, rejects empty input, and is exactly
    permutation-invariant: outcomes are accumulated in sorted order within
    each cell, so any ordering of the input produces bit-identical moments.
    """
    arr = as_array(records)
    if arr.shape[0] == 0:
        raise ValueError("no records to ingest")
    return cells_from_arrays(*(arr[:, i] for i in range(6)))


def cells_from_arrays(z, d, delta_s, s, delta_y, y) -> CellStatistics:
    """Vectorised ingestion from parallel column arrays (nan = missing)."""
    z = np.asarray(z, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    delta_s = np.asarray(delta_s, dtype=np.int64)
    delta_y = np.asarray(delta_y, dtype=np.int64)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)

    count = np.zeros((2, 2), dtype=np.int64)
    surv_obs = np.zeros((2, 2), dtype=np.int64)
    surv_pos = np.zeros((2, 2), dtype=np.int64)
    miss_s = np.zeros((2, 2), dtype=np.int64)
    y_count = np.zeros((2, 2), dtype=np.int64)
    y_mean = np.zeros((2, 2), dtype=float)
    y_m2 = np.zeros((2, 2), dtype=float)

    observed_y = (delta_y == 1) & (delta_s == 1) & (s == 1)
    for zz in (0, 1):
        for dd in (0, 1):
            cell = (z == zz) & (d == dd)
            count[zz, dd] = cell.sum()
            obs = cell & (delta_s == 1)
            surv_obs[zz, dd] = obs.sum()
            surv_pos[zz, dd] = (obs & (s == 1)).sum()
            miss_s[zz, dd] = (cell & (delta_s == 0)).sum()
            ys = np.sort(y[cell & observed_y])
            y_count[zz, dd] = ys.size
            if ys.size:
                mean = float(ys.mean())
                y_mean[zz, dd] = mean
                y_m2[zz, dd] = float(((ys - mean) ** 2).sum())
    return CellStatistics(count, surv_obs, surv_pos, miss_s, y_count, y_mean, y_m2)


def as_array(records) -> np.ndarray:
    """Coerce records to a validated (n, 6) float array, nan for missing.

    Accepts a 2-D array-like in column order ``z, d, delta_s, s, delta_y, y``,
    a dataframe-like with those columns, or a sequence of
    :class:`ObservationRecord`.
    """
    if isinstance(records, np.ndarray) and records.ndim == 2:
        arr = records.astype(float, copy=True)
    elif hasattr(records, "columns"):
        missing = [c for c in COLUMNS if c not in set(records.columns)]
        if missing:
            raise SchemaError(f"missing columns: {', '.join(missing)}")
        arr = np.column_stack([np.asarray(records[c], dtype=float) for c in COLUMNS])
    else:
        records = list(records)
        if records and not isinstance(records[0], ObservationRecord):
            arr = np.asarray(records, dtype=float)
            if arr.ndim != 2:
                raise SchemaError("expected a 2-D array of records")
        else:
            arr = np.full((len(records), 6), np.nan)
            for i, rec in enumerate(records):
                arr[i] = (
                    rec.z,
                    rec.d,
                    rec.delta_s,
                    np.nan if rec.s is None else rec.s,
                    rec.delta_y,
                    np.nan if rec.y is None else rec.y,
                )
    if arr.shape[1] != 6:
        raise SchemaError(f"expected 6 columns {COLUMNS}, got {arr.shape[1]}")
    for i in range(arr.shape[0]):
        record_from_row(arr[i]).validate(i)
    return arr


def record_from_row(row) -> ObservationRecord:
    z, d, delta_s, s, delta_y, y = (float(v) for v in row)
    return ObservationRecord(
        z=int(z) if z in (0.0, 1.0) else -1,
        d=int(d) if d in (0.0, 1.0) else -1,
        delta_s=int(delta_s) if delta_s in (0.0, 1.0) else -1,
        s=None if math.isnan(s) else (int(s) if s in (0.0, 1.0) else -1),
        delta_y=int(delta_y) if delta_y in (0.0, 1.0) else -1,
        y=None if math.isnan(y) else y,
    )


def records_from_array(arr) -> list[ObservationRecord]:
    return [record_from_row(row) for row in np.asarray(arr, dtype=float)]


@dataclass
class ValidationReport:
    """Design diagnostics: arm presence, first-stage strength, cell sizes."""

    n_records: int
    arms_present: bool
    first_stage: float | None
    weak_instrument: bool
    threshold: float
    cell_counts: dict
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_design(records, weak_threshold: float = WEAK_INSTRUMENT_THRESHOLD,
                    require_both_arms: bool = True) -> ValidationReport:
    """Report-only design checks; never raises on bad designs."""
    cells = records if isinstance(records, CellStatistics) else ingest(records)
    failures, warns = [], []
    n1, n0 = cells.arm_count(1), cells.arm_count(0)
    arms = n1 > 0 and n0 > 0
    if not arms and require_both_arms:
        failures.append("single assignment arm")
    first_stage = None
    weak = False
    if arms:
        first_stage = cells.take_rate(1) - cells.take_rate(0)
        weak = abs(first_stage) < weak_threshold
        if weak:
            warns.append(
                f"weak instrument: first-stage difference {first_stage:.4f} "
                f"below threshold {weak_threshold:g}"
            )
    counts = {}
    for zz in (0, 1):
        for dd in (0, 1):
            counts[(zz, dd)] = {
                "n": int(cells.count[zz, dd]),
                "survivors": cells.n(zz, dd, 1),
                "non_survivors": cells.n(zz, dd, 0),
                "missing_s": cells.n_missing_s(zz, dd),
                "observed_y": int(cells.y_count[zz, dd]),
            }
    return ValidationReport(
        n_records=cells.n_records,
        arms_present=arms,
        first_stage=first_stage,
        weak_instrument=weak,
        threshold=weak_threshold,
        cell_counts=counts,
        failures=failures,
        warnings=warns,
    )


def warn_if_weak(report: ValidationReport) -> None:
    import warnings as _warnings

    for message in report.warnings:
        _warnings.warn(message, WeakInstrumentWarning, stacklevel=2)


def read_csv(path) -> np.ndarray:
    """Read a dataset CSV (`z,d,delta_s,s,delta_y,y`; blanks = missing)."""
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if [h.strip() for h in header] != list(COLUMNS):
            raise SchemaError(f"{path}: header must be {','.join(COLUMNS)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 6:
                raise SchemaError(f"{path}: expected 6 fields, got {len(row)}", line=lineno)
            values = []
            for name, fieldval in zip(COLUMNS, row):
                text = fieldval.strip()
                if text == "":
                    if name not in ("s", "y"):
                        raise SchemaError(f"{path}: column {name} may not be empty", line=lineno)
                    values.append(np.nan)
                    continue
                try:
                    values.append(float(text))
                except ValueError:
                    raise SchemaError(f"{path}: column {name}: not a number: {text!r}",
                                      line=lineno) from None
            try:
                record_from_row(values).validate(lineno)
            except InvalidRecordError as exc:
                raise SchemaError(f"{path}: {exc.rule}", line=lineno) from None
            rows.append(values)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def write_csv(path, arr) -> None:
    arr = np.asarray(arr, dtype=float)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COLUMNS)
        for row in arr:
            out = []
            for name, value in zip(COLUMNS, row):
                if math.isnan(value):
                    out.append("")
                elif name == "y":
                    out.append(repr(float(value)))
                else:
                    out.append(str(int(value)))
            writer.writerow(out)
