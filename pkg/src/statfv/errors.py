"""Exception types shared across the package."""


class StatFVError(Exception):
    """Base class for all package errors."""


class NonPhysicalState(StatFVError):
    """A state with non-positive density or pressure was encountered."""


class NonFinite(StatFVError):
    """NaN or Inf detected during time integration."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(StatFVError):
    """Invalid or inconsistent configuration."""


class GridMismatch(StatFVError):
    """Operation requires matching (or 2x-refined) grids."""


class EmptyEnsemble(StatFVError):
    """No completed samples available for the requested statistic."""


class CapExceeded(StatFVError):
    """Sample count exceeds the configured cap for an O(M^3) operation."""


class DegenerateCurve(StatFVError):
    """Structure-function curve unusable for the requested diagnostic."""


class FormatError(StatFVError):
    """Malformed binary field dump or manifest."""
