"""Exception hierarchy shared by the library and the command line front end."""


class VbsmcError(Exception):
    """Base class for all errors raised by vbsmc."""


class ConfigError(VbsmcError, ValueError):
    """Invalid model, channel or filter configuration."""


class DataError(VbsmcError, ValueError):
    """Malformed or out-of-support input data."""


class NumericalError(VbsmcError, ArithmeticError):
    """A numerical procedure could not produce a finite result."""


class FactorizationError(NumericalError):
    """Cholesky factorization failed even after diagonal jitter.

    Attributes
    ----------
    pivot : int
        1-based index of the leading minor that is not positive definite.
    """

    def __init__(self, pivot, message=None):
        self.pivot = int(pivot)
        super().__init__(message or f"covariance not positive definite at pivot {self.pivot}")


class WeightUnderflowError(NumericalError):
    """Every particle likelihood underflowed at a given filter step."""

    def __init__(self, step):
        self.step = int(step)
        super().__init__(f"all particle weights underflowed to zero at step t={self.step}")
