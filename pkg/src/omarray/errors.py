"""Exception types raised by the library."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateMatrixError(ArithmeticError):
    """A transfer matrix cannot be turned into reflection/transmission."""


class DegeneratePointError(ArithmeticError):
    """A closed-form expression has a vanishing denominator at this point."""


class TrackingError(RuntimeError):
    """A resonance could not be followed onto the displaced system."""


class ConvergenceError(RuntimeError):
    """An iterative procedure stopped before reaching its tolerance."""
