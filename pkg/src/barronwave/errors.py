"""Exception types raised by the numerical routines."""


class DivergenceError(ArithmeticError):
    """An integral or constant is infinite for the requested parameters."""


class UndefinedRatioError(ArithmeticError):
    """A norm ratio was requested with a vanishing denominator."""


class NotContractiveError(RuntimeError):
    """The cut-off fixed-point operator is not a contraction; raise the cutoff."""


class NoEigenvalueError(RuntimeError):
    """The eigenvalue bracket does not contain a sign change of mu(lambda) - 1."""


class ConvergenceError(RuntimeError):
    """An iteration stagnated before reaching its tolerance."""
