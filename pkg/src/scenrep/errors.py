"""Exception types shared across the package."""


class ModelError(ValueError):
    """A problem or instance is malformed (dimension mismatch, bad data)."""


class EngineError(RuntimeError):
    """The internal solver hit an unrecoverable numerical state."""


class BackendError(RuntimeError):
    """An external solver backend failed (bad exit, unparsable output)."""


class CompleteRecourseError(RuntimeError):
    """A second-stage problem was infeasible for a feasible first stage.

    The instance data violates the complete-recourse assumption; this is
    a data bug and is never silently skipped.
    """


class TrainingDivergedError(RuntimeError):
    """Training loss became NaN/inf; carries the offending epoch/step."""

    def __init__(self, message: str, epoch: int, step: int):
        super().__init__(message)
        self.epoch = epoch
        self.step = step


class ConfigError(ValueError):
    """A run configuration failed validation."""


class ArtifactError(RuntimeError):
    """An upstream pipeline artifact is missing or fails schema checks."""
