"""Exception hierarchy."""


class NearOptError(Exception):
    """Base class for all package errors."""


class ModelError(NearOptError, ValueError):
    """Malformed or invalid model / exploration input."""


class SolverError(NearOptError):
    """The backend failed or returned an unusable result."""


class SolverUnavailableError(SolverError):
    pass


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


class NumericalError(SolverError):
    pass


class TimeLimitError(SolverError):
    """Time limit reached before any incumbent was found."""


class RegionError(NearOptError, ValueError):
    pass


class InvalidCutError(RegionError):
    """A halfspace would exclude a verified near-optimal point."""


class MembershipError(RegionError):
    """A point offered to the inner approximation is not near-optimal."""


class DegenerateHullError(RegionError):
    """The point hull has zero volume in the ambient space."""
