"""Exception hierarchy shared across the engine.

The three leaf categories map onto the CLI exit codes: configuration
problems (1), data problems (2), numerical divergence (3).
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(EngineError):
    """Invalid configuration or violated call precondition."""

    exit_code = 1


class DataError(EngineError):
    """Malformed or inconsistent input data (files, identifiers, vectors)."""

    exit_code = 2


class DivergenceError(EngineError):
    """Training produced a non-finite loss."""

    exit_code = 3
