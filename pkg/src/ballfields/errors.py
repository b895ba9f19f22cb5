"""Exception types shared across the package.

The CLI maps each class to an exit code, so library code raises the most
specific one that applies.
"""


class BallfieldsError(Exception):
    """Base class for package errors."""


class ConfigError(BallfieldsError, ValueError):
    """Invalid experiment configuration (exit code 2)."""


class NumericalError(BallfieldsError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance (exit code 3)."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge.

    ``estimate`` and ``error`` hold the last value and its error estimate.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class RegimeError(BallfieldsError, ValueError):
    """Parameters fall outside every limit theorem's hypotheses."""


class ResourceGuardError(BallfieldsError, RuntimeError):
    """A simulation would exceed the configured resource guard (exit code 4)."""
