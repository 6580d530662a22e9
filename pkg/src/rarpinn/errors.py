"""Exception types raised across the package."""


class RarPinnError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RarPinnError, ValueError):
    """Invalid shape, preset, oracle parameters or experiment config."""


class UsageError(RarPinnError, ValueError):
    """An operation was called with arguments outside its contract."""


class NumericError(RarPinnError, ArithmeticError):
    """A non-finite value appeared during evaluation or optimization.

    ``where`` names the layer index or iteration at which it was detected.
    """

    def __init__(self, message: str, where: int | None = None):
        super().__init__(message)
        self.where = where
