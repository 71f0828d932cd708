"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter or configuration value violates its documented bounds."""


class SimulationError(RuntimeError):
    """Internal consistency violation detected while running (flit lost, etc.)."""
