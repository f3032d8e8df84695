"""Exception hierarchy shared across the toolkit.

Each class maps to a CLI exit code so scripted callers can distinguish
bad configuration from bad data from numerical trouble.
"""


class ProactError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(ProactError):
    """Invalid configuration value or malformed config file."""

    exit_code = 2


class DataError(ProactError):
    """Malformed or inconsistent input data."""

    exit_code = 3


class NumericError(ProactError):
    """Numerical failure: divergence, non-finite intermediate, LP breakdown."""

    exit_code = 4
