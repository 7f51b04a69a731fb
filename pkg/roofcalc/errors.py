"""Exceptions raised by roofcalc calculations."""


class DegenerateGeometryError(ValueError):
    """A Caratheodory step found no usable affine dependency."""


class MembershipError(ValueError):
    """A query point lies outside the convex hull of the samples."""


class NotOnBoundaryError(ValueError):
    """A boundary-only operation was asked about an interior point."""


class VerticalHyperplaneError(ValueError):
    """No nonvertical supporting hyperplane exists at a boundary point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NonterminationError(RuntimeError):
    """The simplex method hit its iteration cap."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class UnknownExampleError(KeyError, ValueError):
    """An example name is not registered."""

    def __str__(self):
        return str(self.args[0]) if self.args else ''
