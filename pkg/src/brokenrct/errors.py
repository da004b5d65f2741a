"""Exception and warning types shared across the package."""


class BrokenRctError(Exception):
    """Base class for all package errors."""


class InvalidRecordError(BrokenRctError):
    """A record violates the observation-schema invariants."""

    def __init__(self, index, rule):
        self.index = index
        self.rule = rule
        super().__init__(f"record {index}: {rule}")


class SchemaError(BrokenRctError):
    """A CSV file does not conform to the expected schema."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EstimationError(BrokenRctError):
    """Base class for estimation failures."""


class EmptyCellError(EstimationError):
    """A cell required by the estimator contains no usable records."""


class AllOutcomesMissingError(EstimationError):
    """A cell has survivors but no observed outcomes."""


class DenominatorDegenerateError(EstimationError):
    """An identification denominator is too close to zero to invert."""


class MuOutOfUnitIntervalError(EstimationError):
    """A survived-complier mean lies outside (0, 1) on the logit scale."""


class ReductionPreconditionError(EstimationError):
    """Data do not satisfy the precondition of a special-case reduction."""


class NoDonorsError(BrokenRctError):
    """A cell with missing values has no observed donor values."""


class IdentificationWarning(UserWarning):
    """An identified quantity signals a possible assumption violation."""


class WeakDenominatorWarning(IdentificationWarning):
    """An identification denominator is small; estimates may be unstable."""


class WeakInstrumentWarning(UserWarning):
    """The assignment barely moves treatment uptake."""


class SurvivalMonotonicityWarning(UserWarning):
    """The data empirically contradict survival monotonicity."""
