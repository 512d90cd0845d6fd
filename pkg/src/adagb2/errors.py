"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """Invalid experiment configuration (bad field, unknown key, bad combination)."""


class NumericalError(Exception):
    """Non-finite values encountered during a run; carries a diagnostic message."""
