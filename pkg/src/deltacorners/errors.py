"""Exception types raised by the solvers and builders."""


class DeltaCornersError(Exception):
    """Base class for all package errors."""


class GeometryError(DeltaCornersError, ValueError):
    pass


class DegenerateAngle(GeometryError):
    """A corner half-angle is too close to 0, pi/2 or pi."""


class NotSimple(GeometryError):
    """The curve intersects itself."""


class NotClosed(GeometryError):
    """Consecutive arcs do not chain into a closed curve."""


class DomainError(DeltaCornersError, ValueError):
    pass


class NoRoot(DeltaCornersError, RuntimeError):
    """A secular equation had fewer roots in its bracket than expected."""


class BranchNotBound(DeltaCornersError, RuntimeError):
    """Fewer Birman-Schwinger branches cross 1/alpha than requested.

    The partial result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MeshFailure(DeltaCornersError, RuntimeError):
    pass


class FactorizationFailure(DeltaCornersError, RuntimeError):
    pass


class NoConvergence(DeltaCornersError, RuntimeError):
    pass


class IndexOutOfRange(DeltaCornersError, IndexError):
    pass


class DegenerateFit(DeltaCornersError, ValueError):
    """A residual is exactly zero, so log-log fitting is undefined."""
