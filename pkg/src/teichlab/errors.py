"""Domain errors shared across the laboratory.

All of these signal mathematically meaningful degeneracies (saddle
connections, resonances, singular hits, ...), not programming mistakes.
The CLI maps every ``TeichLabError`` to exit code 2 with a machine-readable
payload; usage errors exit with code 1.
"""


class TeichLabError(Exception):
    """Base class for domain errors."""


class ReducibleError(TeichLabError):
    """Permutation is reducible; Rauzy induction is not defined."""


class TieError(TeichLabError):
    """Last top and bottom lengths are equal: saddle connection hit."""


class DivergenceError(TeichLabError):
    """A Zorich run exceeded the configured cap (near-rational data)."""


class BoundaryError(TeichLabError):
    """A point landed on (or too close to) an interval discontinuity."""


class ValidationError(TeichLabError):
    """A translation-surface invariant is violated."""


class SingularityHit(TeichLabError):
    """A trajectory passed within tolerance of a cone point."""

    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class NonMinimalError(TeichLabError):
    """A separatrix meets the transversal boundary within resolution."""


class MeanError(TeichLabError):
    """Observable has a nonzero mean where a zero-mean one is required."""


class ResonanceError(TeichLabError):
    """A small divisor vanished: rational direction hits a support mode."""


class RationalError(TeichLabError):
    """Slope is rational within resolution; continued fraction terminates."""


class ConvergenceError(TeichLabError):
    """An Oseledec subspace estimate failed its self-consistency check."""


class ScaleExhausted(TeichLabError):
    """Orbit time exceeds the deepest computed renormalization scale."""


class OverflowFlush(TeichLabError):
    """Integer accumulator exceeded its configured width."""
