"""Exception hierarchy.

Everything raised on purpose derives from :class:`TopoError`. The CLI maps
:class:`CapacityExceeded` to exit code 3 and every other :class:`TopoError`
to exit code 2.
"""


class TopoError(Exception):
    """Base class for all errors raised by topoconverge."""


# snapshot / metrics I/O
class BadMagic(TopoError):
    pass


class ShapeMismatch(TopoError):
    pass


class NonFinite(TopoError):
    pass


class IoFailure(TopoError):
    pass


class ParseError(TopoError):
    pass


class NonMonotoneSteps(TopoError):
    pass


# graph construction
class DegenerateScale(TopoError):
    """All parameters are zero, so the weight normalization is 0/0."""


class EdgeCollision(TopoError):
    """Two parameters mapped onto the same ordered vertex pair."""


# combinatorial budgets
class CapacityExceeded(TopoError):
    """A cell, matrix or diagram budget was exceeded."""


# diagrams / vectorization
class EmptyDiagram(TopoError):
    pass


class GridMismatch(TopoError):
    pass


# monitoring
class DegenerateDomain(TopoError):
    pass


class UndefinedCorrelation(TopoError):
    pass


class InsufficientSnapshots(TopoError):
    pass
