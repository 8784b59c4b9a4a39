"""Exception hierarchy shared by all droneplan modules."""


class DronePlanError(Exception):
    """Base class for every error raised by this package."""


class ParseError(DronePlanError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionError(DronePlanError):
    """Grid or layer dimensions do not match."""


class BoundsError(DronePlanError):
    """Coordinate outside the grid."""


class ConfigError(DronePlanError):
    """Invalid configuration value or unknown template/key."""


class PayloadError(DronePlanError):
    """Load at or beyond the drivable limit of a drone."""


class InputError(DronePlanError):
    """Operation called with unusable data (too few samples, bad origin, ...)."""


class PlanningError(DronePlanError):
    """No feasible base plan exists within the allowed cluster counts."""
