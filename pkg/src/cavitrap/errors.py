"""Exception types shared across modules."""


class DomainError(ValueError):
    """Input outside the range where a model is defined."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or lost track of a solution."""
