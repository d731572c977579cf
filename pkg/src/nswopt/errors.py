"""Exception hierarchy shared by the solvers and the command line."""


class NSWError(Exception):
    """Base class for all package errors."""


class InstanceError(NSWError, ValueError):
    """Malformed or invariant-violating input."""


class InfeasibleError(InstanceError):
    """The input admits no feasible solution (e.g. inadequate capacities)."""


class ResourceError(NSWError, RuntimeError):
    """An enumeration or iteration budget was exceeded.

    ``partial`` carries whatever intermediate result was available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
