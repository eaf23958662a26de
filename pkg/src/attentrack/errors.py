"""Exception types shared across the pipeline."""


class AttentrackError(Exception):
    """Base class for all package errors."""


class ConfigError(AttentrackError):
    """Malformed configuration or a violated model invariant."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DataError(AttentrackError):
    """Missing or corrupt input data (frames, manifests, scripts)."""


class DimensionMismatchError(AttentrackError):
    """Arrays that must share a shape do not."""


class UndefinedCorrelationError(AttentrackError):
    """Pearson correlation is undefined (zero variance)."""


class NoHeadSplitError(AttentrackError):
    """Blob depth histogram is not bimodal; head cannot be separated."""


class DegenerateFitError(AttentrackError):
    """Ellipse fit impossible: too few or collinear pixels."""
