"""Shared exception types for the privsel package."""


class InvariantError(RuntimeError):
    """An internal consistency guarantee was violated at runtime."""


class ConfigError(ValueError):
    """An experiment configuration field is missing or out of domain."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
