"""Exception hierarchy shared by all pipeline stages.

CLI exit codes map onto these: ValidationError -> 2, BackendError -> 3,
OSError -> 4.
"""


class DefurnishError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DefurnishError, ValueError):
    """Invalid input: bad dimensions, out-of-range parameter, bad config."""


class DimensionError(ValidationError):
    """Image/mask dimensions violate an operation's contract."""


class SynthesisError(DefurnishError, RuntimeError):
    """Synthetic scene generation could not satisfy its constraints."""


class BackendError(DefurnishError, RuntimeError):
    """Backend call failed (connection, timeout, or server-side error)."""

    def __init__(self, message, *, code=None, request_id=None):
        super().__init__(message)
        self.code = code
        self.request_id = request_id


class ProtocolError(BackendError):
    """Backend response violates the wire protocol contract."""


class PipelineStageError(DefurnishError, RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
