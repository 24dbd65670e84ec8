"""Exception hierarchy shared by all solvers."""


class BHFError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(BHFError, ValueError):
    """An argument is outside the range an operation accepts."""


class DomainError(BHFError, ValueError):
    """An operator or map was evaluated outside the region where it is defined."""


class NumericError(BHFError, ArithmeticError):
    """A numerical kernel (factorization, line search, ...) failed."""


class DivergenceError(NumericError):
    """An iteration left the region in which it is known to converge."""
