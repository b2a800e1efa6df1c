"""Exception hierarchy shared across the engine."""


class TryOnError(Exception):
    """Base class for all engine errors."""


class EmptyMask(TryOnError):
    """An operation that requires set pixels received an empty mask."""


class DimensionMismatch(TryOnError):
    """Two rasters that must share dimensions do not."""


class NoPersonDetected(TryOnError):
    """The label map carries no usable person segments."""


class UnknownFixture(TryOnError):
    """Mock backend has no fixture registered for the given image."""


class CatalogError(TryOnError):
    """Garment catalog failed validation at load time."""


class BackendError(TryOnError):
    """Base class for model-backend failures."""


class BackendUnavailable(BackendError):
    """Backend endpoint unreachable or timed out after all retries."""


class BackendProtocol(BackendError):
    """Backend answered with a malformed or invariant-violating response."""


class BackendRejected(BackendError):
    """Backend answered with a non-2xx status."""

    def __init__(self, status: int, message: str):
        super().__init__(f"backend rejected request ({status}): {message}")
        self.status = status


class StageError(TryOnError):
    """Pipeline failure attributed to the stage where it occurred."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
