"""Exception hierarchy; the CLI maps each family to its own exit code."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed or produced an inconsistent result."""


class ConvergenceError(NumericalError):
    """An iterative solver stopped without meeting its tolerance."""


class ConsistencyError(NumericalError):
    """Two routes to the same quantity disagree beyond tolerance."""
