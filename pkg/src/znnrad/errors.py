"""Exception hierarchy shared by all znnrad modules."""


class ZnnradError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ZnnradError):
    """Invalid configuration or dataset layout (maps to CLI exit code 2)."""


class InputDataError(ZnnradError):
    """Input data violates an operation's precondition."""


class SplitError(ZnnradError):
    """Dataset cannot be partitioned as requested."""


class NumericError(ZnnradError):
    """A numerical routine failed (e.g. indefinite covariance)."""


class DivergenceError(ZnnradError):
    """State evolution produced non-finite values.

    Carries the residual trace accumulated up to the failure in
    ``trace`` so callers can inspect the blow-up.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class TrainingError(ZnnradError):
    """Training preconditions violated (e.g. single-class input)."""


class UndefinedMetricError(ZnnradError):
    """A metric is undefined for the given counts (e.g. absent class)."""


class ArtifactFormatError(ZnnradError):
    """On-disk artifact has an unknown or incompatible schema version."""
