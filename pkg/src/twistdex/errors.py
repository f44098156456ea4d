"""Exception types raised across the package."""


class TwistdexError(Exception):
    pass


class NumericError(TwistdexError):
    """A matrix decomposition failed to converge."""


class DomainError(TwistdexError, ValueError):
    pass


class InvalidAutomorphism(TwistdexError, ValueError):
    pass


class NoRibbonStructure(TwistdexError):
    """The automorphism has no known square root with the ribbon property."""


class InvalidConformalFactor(TwistdexError, ValueError):
    pass


class RibbonConstructionFailure(TwistdexError):
    pass


class RequiresInvertible(TwistdexError):
    """Raised when D is singular; use the invertible double instead."""


class ContractViolation(TwistdexError, ValueError):
    pass


class InvalidConnection(TwistdexError, ValueError):
    pass


class InvalidFamily(TwistdexError, ValueError):
    pass


class ScenarioError(TwistdexError):
    """Malformed scenario file. ``location`` is a JSON path like ``$.D.kind``."""

    def __init__(self, message, location="$"):
        super().__init__(f"{location}: {message}")
        self.location = location
