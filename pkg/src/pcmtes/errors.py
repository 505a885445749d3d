"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or violates an invariant."""


class StabilityError(ValueError):
    """Requested fixed time step exceeds the explicit-integration bound."""


class ProgressError(RuntimeError):
    """An adaptive step kept splitting without consuming simulated time."""
