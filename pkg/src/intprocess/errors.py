"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class IntProcessError(Exception):
    """Base class for every error raised by the package."""


class NumericalError(IntProcessError):
    """A numerical routine failed to produce a trustworthy value."""


class QuadratureError(NumericalError):
    """Adaptive quadrature hit its subdivision budget before converging.

    The best estimate and its error estimate are attached so callers can
    decide whether to use them anyway.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class PoleError(NumericalError):
    """An exponent or transform was evaluated at (or too close to) a pole."""


class SeriesConvergenceError(NumericalError):
    """A truncated series did not meet its tolerance within the term budget."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DomainError(IntProcessError, ValueError):
    """Parameters or arguments outside the documented domain."""


class ConfigError(IntProcessError):
    """Malformed or inconsistent run configuration."""
