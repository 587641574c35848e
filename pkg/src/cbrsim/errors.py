"""Shared exception types."""


class ConfigError(ValueError):
    """A scenario description failed to parse or violated an invariant."""


class InvariantError(RuntimeError):
    """A structural invariant of the simulation was violated (internal bug)."""
