"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`SobopatchError`, which itself is a :class:`ValueError` so that
callers who only care about "bad input" can catch that.
"""


class SobopatchError(ValueError):
    """Base class for all package errors."""


# graph construction
class NonPositiveMeasure(SobopatchError):
    pass


class DuplicateEdge(SobopatchError):
    pass


class SelfLoop(SobopatchError):
    pass


class IndexOutOfRange(SobopatchError, IndexError):
    pass


class EmptyGraph(SobopatchError):
    pass


class NotCountingMeasure(SobopatchError):
    pass


# inequality constants
class NoEdges(SobopatchError):
    pass


class Disconnected(SobopatchError):
    pass


class DegenerateOrder(SobopatchError):
    """Raised when the integrability exponent p is not below the order k."""


class OrderingViolated(SobopatchError):
    pass


# coverings
class EmptyLevel(SobopatchError):
    pass


class KappaOutOfRange(SobopatchError):
    pass


class NuNotAbovePorder(SobopatchError):
    pass


class PieceDisconnected(SobopatchError):
    pass


# model manifolds
class DimensionTooLow(SobopatchError):
    pass


class StepFailure(SobopatchError):
    pass


class KindUnsupported(SobopatchError):
    pass


class WindowEmpty(SobopatchError):
    pass


class NonPositiveField(SobopatchError):
    pass


# analysis
class MOutOfRange(SobopatchError):
    pass


class MissingRho(SobopatchError):
    pass


class InvalidS(SobopatchError):
    pass


# cli
class ConfigInvalid(SobopatchError):
    pass
