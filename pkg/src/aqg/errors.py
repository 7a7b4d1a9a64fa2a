"""Exception hierarchy. The CLI maps each family onto an exit code."""


class AQGError(Exception):
    exit_code = 2


class ConfigError(AQGError, ValueError):
    """Invalid configuration or usage; raised before any work is done."""

    exit_code = 1


class DataError(AQGError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class ProviderError(AQGError):
    """Generation provider failure (HTTP error status, bad payload)."""

    exit_code = 3

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


class RetryableProviderError(ProviderError):
    """Transport-level failure that persisted after all retry attempts."""

    def __init__(self, message: str, attempts: int, status: int | None = None):
        super().__init__(message, status=status)
        self.attempts = attempts


class ContentError(ProviderError):
    """Provider answered, but no usable question could be extracted."""

    def __init__(self, message: str, record_id: str | None = None):
        super().__init__(message)
        self.record_id = record_id
