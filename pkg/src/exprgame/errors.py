"""Shared exception types."""


class ContractError(ValueError):
    """An operation was called with arguments violating its contract."""


class ConfigError(ValueError):
    """A configuration value is invalid (bad filter radius, singular affine, ...)."""


class SessionClosed(RuntimeError):
    """A frame or tick was submitted to a finished game session."""


class RecaptureNeeded(Exception):
    """Template registration rejected some images; nothing was stored."""

    def __init__(self, failed_indices):
        self.failed_indices = sorted(int(i) for i in failed_indices)
        super().__init__(f"images at indices {self.failed_indices} failed validity checks")
