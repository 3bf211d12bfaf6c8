"""Exception types raised across the package."""


class RescertError(Exception):
    """Base class for all package errors."""


class ArgumentError(RescertError, ValueError):
    """An argument is outside its documented range."""


class DomainError(RescertError, ValueError):
    """A complex evaluation would leave the principal branch."""


class ContractionError(RescertError, ValueError):
    """The inversion recurrence is not a contraction for this theta."""


class NumericalError(RescertError, RuntimeError):
    """A numerical kernel failed (LAPACK error, non-finite output)."""


class ConvergenceError(NumericalError):
    """An iterative method hit its iteration cap."""

    def __init__(self, msg, last=None, iterations=None):
        super().__init__(msg)
        self.last = last
        self.iterations = iterations


class ConfigError(RescertError, ValueError):
    """A run configuration failed validation.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, msg, field=None):
        super().__init__(f"{field}: {msg}" if field else msg)
        self.field = field
