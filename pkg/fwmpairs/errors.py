"""Exception types shared across the package."""


class FwmPairsError(Exception):
    """Base class for every error raised by fwmpairs."""


class ConfigError(FwmPairsError, ValueError):
    """Raised when a config file or override cannot be parsed or validated."""


class DomainError(FwmPairsError, ValueError):
    """Raised when a physical input lies outside the model's domain."""


class CalibrationError(FwmPairsError, RuntimeError):
    """Raised when calibration references are inconsistent or the system is singular."""


class NumericalError(FwmPairsError, RuntimeError):
    """Raised when a root search, fit or self-check fails."""


class CountingError(FwmPairsError, ValueError):
    """Raised when a count-derived metric is undefined."""
