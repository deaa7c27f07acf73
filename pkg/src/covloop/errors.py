"""Exception hierarchy shared across the package."""


class CovloopError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(CovloopError):
    """An argument or state violated a documented precondition."""


class UnsupportedLanguage(CovloopError):
    """Target file extension maps to no supported language."""


class PersistError(CovloopError):
    """Writing an on-disk artifact failed; message names the path."""


class ParseError(CovloopError):
    """A coverage report or export did not match its expected format."""


class BackendError(CovloopError):
    """Base class for completion backend failures."""


class MalformedResponse(BackendError):
    """Backend kept returning output that failed schema validation."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class TransportError(BackendError):
    """Network-level failure talking to an HTTP completion endpoint."""


class RateLimited(BackendError):
    """Endpoint rejected the request with a rate limit."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class CompileError(CovloopError):
    """Target compilation failed; message carries the diagnostics."""


class MissingToolchain(CovloopError):
    """A required external tool (compiler, gcov, interpreter) is absent."""


class SpawnError(CovloopError):
    """The target process could not be started."""


class ToolInvocationError(CovloopError):
    """An external coverage tool exited abnormally; message carries stderr."""
