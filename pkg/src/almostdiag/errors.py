"""Exception types raised by the toolkit."""


class AlmostDiagError(Exception):
    """Base class for all toolkit errors."""


class OffGridShift(AlmostDiagError):
    pass


class ZeroWindow(AlmostDiagError):
    pass


class RangeExceeded(AlmostDiagError):
    pass


class ShapeMismatch(AlmostDiagError):
    pass


class GridMismatch(AlmostDiagError):
    pass


class MidpointUnrepresentable(AlmostDiagError):
    pass


class NotIntegrable(AlmostDiagError):
    pass


class LatticeMismatch(AlmostDiagError):
    pass


class EmptyCell(AlmostDiagError):
    pass


class NotAFrame(AlmostDiagError):
    pass


class InsufficientData(AlmostDiagError):
    pass


class AllBelowFloor(AlmostDiagError):
    pass


class NotInCatalog(AlmostDiagError):
    pass


class NonSquareGrid(AlmostDiagError):
    pass


class MissingWindow(AlmostDiagError):
    pass


class PacketEscapesBox(AlmostDiagError):
    pass
