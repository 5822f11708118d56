"""Exception types raised across the package."""


class QFSNetError(Exception):
    """Base class for all package errors."""


class ZeroStateError(QFSNetError, ValueError):
    pass


class DimensionError(QFSNetError, ValueError):
    pass


class DomainError(QFSNetError, ValueError):
    pass


class BoundaryError(QFSNetError, ValueError):
    pass


class DegenerateHistogramError(QFSNetError, ValueError):
    pass


class ShapeError(QFSNetError, ValueError):
    pass


class EmptySampleError(QFSNetError, ValueError):
    pass


class SpecError(QFSNetError, ValueError):
    pass


class PGMFormatError(QFSNetError, ValueError):
    pass
