"""Exception hierarchy.

Every error raised by the library derives from :class:`MixrecError`; most
also subclass the closest builtin so callers can catch ``ValueError``.
"""


class MixrecError(Exception):
    """Base class for all library errors."""


# model
class SimplexViolation(MixrecError, ValueError):
    pass


class PmfViolation(MixrecError, ValueError):
    pass


class ShapeMismatch(MixrecError, ValueError):
    pass


class RangeViolation(MixrecError, ValueError):
    pass


class CapacityExceeded(MixrecError, MemoryError):
    pass


class IndexOutOfRange(MixrecError, IndexError):
    pass


class EmptyKeepSet(MixrecError, ValueError):
    pass


# tensor_core
class ModePartitionError(MixrecError, ValueError):
    pass


class LengthMismatch(MixrecError, ValueError):
    pass


# spectral
class RankTooLarge(MixrecError, ValueError):
    pass


class SingularTruncation(MixrecError, ArithmeticError):
    pass


class ComplexSpectrum(MixrecError, ArithmeticError):
    """A conjugate pair of eigenvalues was found."""


class DegenerateGap(MixrecError, ArithmeticError):
    """Two eigenvalues are closer than the requested gap."""


class TooManyColumns(MixrecError, ValueError):
    pass


# identifiability
class EmptySet(MixrecError, ValueError):
    pass


class WitnessNotFound(MixrecError, RuntimeError):
    pass


# recovery
class RankCollapse(MixrecError, ArithmeticError):
    """The m-th singular value of the probe-marginalized unfolding vanished."""


class ProbeExhausted(MixrecError, RuntimeError):
    """No probe weight vector produced a usable real, separated spectrum."""


class DimensionTooSmall(MixrecError, ValueError):
    pass


class ZeroVector(MixrecError, ValueError):
    pass


# metrics
class CoordinateNotRecovered(MixrecError, KeyError):
    pass


class NotEstimable(MixrecError, ValueError):
    pass


class TooFewPoints(MixrecError, ValueError):
    pass
