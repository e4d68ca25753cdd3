"""Exception hierarchy used across the toolkit."""


class TopoforgeError(Exception):
    """Base class for all toolkit errors."""


class Unreachable(TopoforgeError):
    """No path exists between the requested endpoints."""


class CapExceeded(TopoforgeError):
    """More equal-cost paths exist than the enumeration cap allows."""


class NotInTree(TopoforgeError):
    """A node queried against a shortest-path tree is not reachable in it."""


class ConvergenceError(TopoforgeError):
    """An iterative solver exceeded its hard iteration cap."""


class InfeasibleDemand(TopoforgeError):
    """A demand cannot be routed even by the exact constrained-path solver."""


class ParseError(TopoforgeError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingCoordinates(ParseError):
    """A node entry lacks usable coordinates."""


class MissingCapacity(ParseError):
    """A link entry has neither an installed nor a module capacity."""


class InvalidKappa(TopoforgeError):
    """Loss constant would put some arc's loss probability at or above 1."""


class Disconnected(TopoforgeError):
    """A generated graph is not connected."""


class InvalidPlan(TopoforgeError):
    """A design plan fails independent route recomputation."""


class BudgetTooSmall(TopoforgeError):
    """The topology variable budget is below the known requirement."""
