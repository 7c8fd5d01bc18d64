"""Exception hierarchy shared by all polynav modules."""


class PolynavError(Exception):
    """Base class for every error raised by polynav."""


class DimensionMismatch(PolynavError, ValueError):
    pass


class EmptyPolytope(PolynavError, ValueError):
    pass


class UnboundedPolytope(PolynavError, ValueError):
    pass


class SolverFailure(PolynavError, RuntimeError):
    """A QP solve did not return an optimal point."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class DegenerateContact(PolynavError):
    """Closest points coincide, so no separating direction exists."""


class Infeasible(PolynavError, RuntimeError):
    pass


class NoPath(PolynavError):
    pass


class ParseError(PolynavError, ValueError):
    pass


class ValidationError(PolynavError, ValueError):
    pass


class IoError(PolynavError, OSError):
    """Writing results to disk failed."""
