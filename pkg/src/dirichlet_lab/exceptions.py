"""Exception hierarchy shared by all modules."""


class DirichletLabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(DirichletLabError, ValueError):
    """An argument lies outside the domain of the function being evaluated."""


class UnboundedInverseError(DomainError):
    """The generalized inverse of a rate function is infinite at the requested level."""


class SolverError(DirichletLabError, RuntimeError):
    """A root bracket could not be established or the solver failed to converge."""


class BudgetExceededError(DirichletLabError, RuntimeError):
    """An enumeration would exceed its configured size budget."""


class DivergenceExhaustedError(DirichletLabError, RuntimeError):
    """A divergent-series construction ran out of terms before closing a block."""
