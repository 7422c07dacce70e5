"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario configuration (bad line, unknown key, out-of-range value)."""


class NumericalError(RuntimeError):
    """Integration produced an unusable state (norm drift, norm underflow)."""
