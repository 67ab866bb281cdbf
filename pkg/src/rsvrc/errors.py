"""Exception hierarchy shared by every layer of the package."""


class RsvrcError(Exception):
    """Base class for all errors raised by :mod:`rsvrc`."""


class ContractViolation(RsvrcError, ValueError):
    """A caller broke a precondition (mismatched base points, empty batch, ...)."""


class DomainError(RsvrcError, ValueError):
    """An input lies outside the domain of a geometric map.

    Typical causes are antipodal points on the sphere (outside the injectivity
    radius) or a matrix that is not positive definite.
    """


class SolverFailure(RsvrcError, RuntimeError):
    """An iterative routine hit its iteration cap without certifying a result."""


class InvariantViolation(RsvrcError, AssertionError):
    """A verified property did not hold (used by the diagnostics suite)."""


class UsageError(RsvrcError, ValueError):
    """Bad command-line or configuration input."""
