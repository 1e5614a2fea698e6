"""Exception hierarchy shared by every module of the package."""


class MicmaError(Exception):
    """Base class for all package errors."""


class DomainError(MicmaError, ValueError):
    """An argument lies outside the domain of a function."""


class DimensionError(MicmaError, ValueError):
    """Vector length or dimension index does not fit the search space."""


class InvalidMatrix(MicmaError, ValueError):
    pass


class NumericalFailure(MicmaError, ArithmeticError):
    """A numerical routine diverged or produced non-finite values."""


class EvaluationError(MicmaError, ValueError):
    pass


class ConfigError(MicmaError, ValueError):
    """Bad benchmark name, method, or run configuration."""


class EdgeCase(MicmaError):
    """The mean is not strictly inside the threshold range of a discrete dim.

    Raised by ``low_up_thresholds``; callers fall back to the
    toward-threshold correction.
    """
