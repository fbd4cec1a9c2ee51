"""Exception types shared across the package."""


class WasslabError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(WasslabError):
    """Operands live in different (or invalid) ambient dimensions."""


class DomainError(WasslabError):
    """Argument outside the documented domain of an operation."""


class EmptyCollection(WasslabError):
    """A non-empty collection was required."""


class UnsupportedField(WasslabError):
    """The field variant does not support the requested operation."""


class InvalidWeight(WasslabError):
    """Negative or non-finite weight supplied for a measure."""


class NotNormalized(WasslabError):
    """Weight sum too far from 1 to be repaired by renormalization."""


class EmptyMeasure(WasslabError):
    """A measure must carry at least one atom."""


class MapRangeError(WasslabError):
    """A point map produced non-finite coordinates."""


class SolverStalled(WasslabError):
    """Transport solver exceeded its iteration cap; treated as a bug signal."""


class InstanceTooLarge(WasslabError):
    """Instance exceeds the size supported by exhaustive enumeration."""


class NumericalInconsistency(WasslabError):
    """An internal exactness guarantee was violated; signals a solver bug."""


class SphereSamplingFailed(WasslabError):
    """No sphere candidate landed inside the requested distance band."""


class SequenceTooClose(WasslabError):
    """A probed sequence element is within the sphere radius of the base point."""


class NoUsablePairs(WasslabError):
    """Every supplied pair was degenerate (distance below resolution)."""


class InvalidRay(WasslabError):
    """A curve failed its unit-speed or calibration probe."""


class ParseError(WasslabError):
    """Malformed input file."""


class InvalidMeasure(WasslabError):
    """A parsed measure violates a construction invariant."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class IoError(WasslabError):
    """Report emission failed at the filesystem level."""


class DescentStalled(WasslabError):
    """Greedy descent found no admissible candidate at some step.

    Carries the partially built polyline, the 1-based step index at which
    the search gave up, and the best calibration gap seen at that step.
    """

    def __init__(self, message: str, step: int, best_gap: float, polyline=None):
        super().__init__(message)
        self.step = step
        self.best_gap = best_gap
        self.polyline = polyline
