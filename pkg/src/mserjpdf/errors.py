"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad parameter combination, malformed config file)."""


class DegenerateChannelError(ValueError):
    """Raised when an operation is undefined for a zero channel/gain."""
