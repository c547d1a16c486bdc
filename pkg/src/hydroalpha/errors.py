"""Exception types shared across the package."""

from __future__ import annotations


class ParameterError(ValueError):
    """Invalid argument, shape, or configuration value."""


class NumericError(ArithmeticError):
    """A numerical construction failed (non-finite values, rank loss, bad eigensolve)."""


class AnalyticBandExhausted(NumericError):
    """The analytic band a - lambda*theta is no longer positive (T* reached)."""


class PreconditionError(ValueError):
    """Input data violate a mathematical precondition of the model."""


class ConfigError(ParameterError):
    """Malformed or invalid run configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
