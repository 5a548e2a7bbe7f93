"""Exception types shared across the toolkit."""


class VlcUavError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(VlcUavError, ValueError):
    """A physical or algorithmic parameter violates its domain."""


class GeometryError(VlcUavError, ValueError):
    """Degenerate link geometry (e.g. transmitter and receiver coincide)."""


class InfeasibleAltitudeError(VlcUavError):
    """No horizontal offset can satisfy the gain threshold at this altitude."""


class PlanningError(VlcUavError):
    """A path planner failed to produce a valid path."""


class PlanValidationError(VlcUavError):
    """A planned or executed trajectory violates the mission constraints."""


class TrainingDivergedError(VlcUavError):
    """A non-finite training signal was detected."""


class ConfigError(VlcUavError):
    """Bad experiment configuration; message carries the offending key path."""
