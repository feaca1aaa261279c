"""Exception types shared across the package."""


class ObliqueTDError(Exception):
    """Base class for all library-specific failures."""


class SingularMatrixError(ObliqueTDError):
    """A linear system was numerically singular (condition estimate above threshold)."""

    def __init__(self, message, cond=None):
        super().__init__(message if cond is None else f"{message} (condition estimate {cond:.3e})")
        self.cond = cond


class NonErgodicError(ObliqueTDError):
    """Power iteration for the stationary distribution failed to converge."""


class NotTabularError(ObliqueTDError):
    """Operation requires a tabular (finite-state) domain."""


class DegenerateSampleError(ObliqueTDError):
    """Per-sample scaling is undefined because the feature difference vanishes."""


class SequentialSamplingError(ObliqueTDError):
    """A learner that requires chained trajectories received a broken stream."""


class ConfigError(ObliqueTDError):
    """Experiment configuration is invalid."""
