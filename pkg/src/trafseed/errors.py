"""Exception types shared across the package."""


class TrafficError(Exception):
    """Base class for every error raised by trafseed."""


class DomainError(TrafficError, ValueError):
    """An input lies outside the domain where a quantity is defined."""


class ConservationError(TrafficError):
    """Routed flows do not add up to the demand."""


class InfeasibleDemand(TrafficError):
    """No routing of the requested kind can carry the demand."""


class NumericalError(TrafficError):
    """The LP solver failed to converge within its iteration cap."""


class BudgetExceeded(TrafficError):
    """Brute-force enumeration would exceed the configured node cap."""


class PlacementError(TrafficError):
    """Vehicles do not physically fit on a ring road."""


class InversionError(TrafficError):
    """A (flow, regime) pair has no density preimage on the fundamental diagram."""


class CollisionError(TrafficError):
    """Two vehicles overlapped during a simulation step."""
