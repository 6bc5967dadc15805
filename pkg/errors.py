"""Exception types shared by the optimizer, the environments and the harness."""


class WdrboError(Exception):
    """Base class for every error raised by this package."""


class InputError(WdrboError, ValueError):
    """A caller passed something malformed (wrong dimension, out of bounds, ...)."""


class NumericalError(WdrboError, ArithmeticError):
    """A linear-algebra step failed beyond the configured tolerances."""

    def __init__(self, message: str, condition: float | None = None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class ConfigError(WdrboError):
    """An experiment config could not be loaded or validated.

    The message lists every failure with its dotted field path.
    """


class OutputError(WdrboError, OSError):
    """Writing run artifacts failed. The message names the offending path."""
