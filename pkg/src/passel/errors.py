"""Shared exception types.

``ConfigError`` covers bad run configuration (CLI exit code 1);
``FormatError`` covers malformed data files (CLI exit code 2).
"""


class ConfigError(Exception):
    pass


class FormatError(ValueError):
    pass
