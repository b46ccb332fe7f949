"""Exception types shared across the package."""


class InterorderError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(InterorderError, ValueError):
    """An argument violates a documented precondition."""


class NumericFailureError(InterorderError, ArithmeticError):
    """A computation produced a non-finite value.

    Carries the coalition (if any) whose evaluation failed.
    """

    def __init__(self, message, coalition=None):
        super().__init__(message)
        self.coalition = coalition


class CapacityExceededError(InterorderError):
    """The player count exceeds what exact enumeration supports."""


class TrainingFailureError(InterorderError):
    """Training diverged; carries the epoch index where loss went non-finite."""

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


class ConfigError(InterorderError):
    """An experiment config is invalid; message names the offending field path."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
