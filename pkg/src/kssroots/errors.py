class DomainError(ValueError):
    """Argument outside the documented domain of an operation."""


class NumericalError(ArithmeticError):
    """A computed quantity violated a hard numerical invariant."""


class ConvergenceError(NumericalError):
    """An iterative procedure did not reach its tolerance."""
