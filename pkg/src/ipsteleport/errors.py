"""Exception hierarchy shared by all modules."""


class IpsTeleportError(ValueError):
    """Base class for every error raised by this package."""


class DomainError(IpsTeleportError):
    """A physical parameter lies outside its admissible range."""


class TruncationError(IpsTeleportError):
    """Probability mass beyond the Fock cutoff exceeds the configured tolerance."""


class InvariantError(IpsTeleportError):
    """A state or operator violates a structural invariant (hermiticity, trace, positivity)."""


class ConditioningError(IpsTeleportError):
    """A conditional state was requested for an outcome of zero probability."""


class QuadratureError(IpsTeleportError):
    """The integration domain leaves too much mass outside the grid."""


class AmbiguousRootError(IpsTeleportError):
    """More than one sign change was found where a single root was expected."""

    def __init__(self, message: str, brackets: list[tuple[float, float]]):
        super().__init__(message)
        self.brackets = brackets
