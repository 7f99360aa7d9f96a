"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage problems map to 1,
ConfigurationError/DataValidationError to 2, TrainingDivergedError to 3.
"""


class SdnGuardError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SdnGuardError):
    """A config value, topology element or estimator setting is invalid."""


class DataValidationError(SdnGuardError):
    """Input data violates a documented contract (shape, finiteness, order)."""


class OrderingError(DataValidationError):
    """A stream that must be sorted by timestamp is not."""


class WindowAssignmentError(DataValidationError):
    """An event was routed to a window that does not contain its timestamp."""


class CalibrationError(SdnGuardError):
    """Threshold calibration received an empty or too-small sample."""


class TrainingDivergedError(SdnGuardError):
    """A non-finite loss or gradient was produced during training."""
