"""Exception types raised across the package."""


class InvalidDimensionError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class RoleMismatchError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ToleranceWarning(UserWarning):
    """Raised (as a warning) when a run falls outside its correctness guarantee."""
