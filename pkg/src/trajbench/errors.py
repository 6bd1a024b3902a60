"""Exception hierarchy shared across the package."""


class TrajbenchError(Exception):
    """Base class for all errors raised by this package."""


class DataError(TrajbenchError):
    """Invalid dataset content (empty stream, duplicates, non-finite values)."""


class ParseError(DataError):
    """Malformed input record; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(TrajbenchError):
    """Invalid experiment or preprocessing configuration."""


class ProtocolError(TrajbenchError):
    """External-predictor wire protocol violation (timeout, bad payload, crash)."""

    def __init__(self, message: str, request_id: int | None = None, payload: str | None = None):
        if request_id is not None:
            message = f"request {request_id}: {message}"
        super().__init__(message)
        self.request_id = request_id
        self.payload = payload


class StageError(TrajbenchError):
    """Pipeline failure, tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
