"""Interval exchange transformations and Rauzy-Veech-Zorich renormalization.

Conventions
-----------
A labelled permutation is a pair of rows (``top``, ``bottom``) over a common
alphabet.  The exchange map reads subinterval lengths off the top row and
reassembles them in bottom-row order.  Rauzy induction compares the two last
subintervals:

* the *winner* is the longer of the two, the *loser* the shorter;
* the move kind (``"top"`` / ``"bottom"``) names the side whose last interval
  wins;
* the loser is removed from the end of its row and reinserted immediately
  after the winner in that same row; the winner's length shrinks by the
  loser's length.

With ``lengths_old = E @ lengths_new``, the elementary matrix of a move is
``E = I + e[winner, loser]`` (indices in the fixed alphabet order), so
products of elementary matrices reconstruct original lengths from induced
ones exactly.

Exact ties between the two last lengths are saddle connections.  They are
measure zero and always raised as :class:`~teichlab.errors.TieError`, never
broken by an arbitrary choice.

Zorich acceleration groups maximal runs of same-kind moves.  Runs in the
stable configuration (winner sitting next to the loser at the end of its
row, which is always the case for d = 2) are executed with a single floor
division instead of repeated subtraction, so near-rational data costs O(1)
per run instead of one iteration per continued-fraction quotient.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import BoundaryError, DivergenceError, ReducibleError, TieError

#: Absolute tolerance below which two competing lengths count as tied.
TIE_TOL = 1e-14

#: Default cap on the number of elementary steps in one Zorich run.
MAX_RUN = 10 ** 9


@dataclass(frozen=True)
class Permutation:
    """Labelled permutation datum of an interval exchange.

    ``labels`` fixes the alphabet order used to index length vectors and
    matrices; it never changes under induction even as the rows reorder.
    """

    top: tuple
    bottom: tuple
    labels: tuple = None

    def __post_init__(self):
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(self.top))
        top, bottom, labels = self.top, self.bottom, self.labels
        if len(top) < 2:
            raise ValueError("need at least 2 intervals")
        if sorted(top) != sorted(labels) or sorted(bottom) != sorted(labels):
            raise ValueError("top and bottom must permute the same label set")
        if len(set(top)) != len(top):
            raise ValueError("duplicate labels")

    @property
    def d(self) -> int:
        return len(self.top)

    def index(self, label) -> int:
        return self.labels.index(label)

    def is_irreducible(self) -> bool:
        """No proper prefix of the top row is set-equal to the bottom prefix."""
        seen_top, seen_bot = set(), set()
        for k in range(self.d - 1):
            seen_top.add(self.top[k])
            seen_bot.add(self.bottom[k])
            if seen_top == seen_bot:
                return False
        return True

    def check_irreducible(self):
        if not self.is_irreducible():
            raise ReducibleError(f"reducible permutation {self.top}/{self.bottom}")


@dataclass
class Iet:
    """Interval exchange: permutation plus positive lengths.

    ``log_scale`` accumulates the logarithms of the total-length
    renormalizations performed by :func:`zorich_step` (negative under
    contraction); ``-log_scale`` is the discrete Teichmueller time of the
    renormalization orbit.  The raw induced lengths, had no renormalization
    ever been applied, are ``lengths * exp(log_scale)``.
    """

    perm: Permutation
    lengths: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=float)
        if self.lengths.shape != (self.perm.d,):
            raise ValueError("lengths must match the alphabet size")
        if not np.all(self.lengths > 0):
            raise ValueError("lengths must be strictly positive")

    @property
    def d(self) -> int:
        return self.perm.d

    @property
    def total(self) -> float:
        return float(self.lengths.sum())

    def length(self, label) -> float:
        return float(self.lengths[self.perm.index(label)])

    def normalized(self) -> "Iet":
        s = self.total
        return Iet(self.perm, self.lengths / s, self.log_scale + math.log(s))

    # -- geometry of the exchange -------------------------------------

    def top_breaks(self) -> np.ndarray:
        """Domain breakpoints 0 = x_0 < x_1 < ... < x_d = total."""
        lens = [self.length(a) for a in self.perm.top]
        return np.concatenate([[0.0], np.cumsum(lens)])

    def offsets(self) -> dict:
        """Translation applied to each labelled subinterval."""
        pos_top, pos_bot = {}, {}
        x = 0.0
        for a in self.perm.top:
            pos_top[a] = x
            x += self.length(a)
        x = 0.0
        for a in self.perm.bottom:
            pos_bot[a] = x
            x += self.length(a)
        return {a: pos_bot[a] - pos_top[a] for a in self.perm.labels}

    def inverse(self) -> "Iet":
        """The inverse exchange (top and bottom rows swapped)."""
        return Iet(Permutation(self.perm.bottom, self.perm.top, self.perm.labels),
                   self.lengths.copy(), self.log_scale)

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "top": list(self.perm.top),
            "bottom": list(self.perm.bottom),
            "lengths": [self.length(a) for a in self.perm.top],
        })

    @classmethod
    def from_json(cls, text: str) -> "Iet":
        data = json.loads(text)
        top = tuple(data["top"])
        bottom = tuple(data["bottom"])
        perm = Permutation(top, bottom)
        by_label = dict(zip(top, data["lengths"]))
        lengths = [by_label[a] for a in perm.labels]
        return cls(perm, np.array(lengths, dtype=float))


@dataclass(frozen=True)
class RauzyStep:
    """Record of one elementary Rauzy move."""

    kind: str           # "top" or "bottom": the side whose last interval won
    winner: object
    loser: object
    elementary_matrix: np.ndarray   # I + e[winner, loser], determinant +1

    def __post_init__(self):
        if self.kind not in ("top", "bottom"):
            raise ValueError("kind must be 'top' or 'bottom'")


@dataclass
class VisitationMatrix:
    """Ordered product of elementary matrices, kept in exact integers."""

    entries: list                   # d x d list of Python ints
    steps: int = 0

    @classmethod
    def identity(cls, d: int) -> "VisitationMatrix":
        return cls([[1 if i == j else 0 for j in range(d)] for i in range(d)], 0)

    def right_multiply_elementary(self, winner: int, loser: int, mult: int = 1):
        """In-place ``B <- B @ (I + mult * e[winner, loser])``."""
        for row in self.entries:
            row[loser] += mult * row[winner]
        self.steps += mult

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=object)

    def determinant(self) -> int:
        return int_det(self.entries)

    def apply(self, vector) -> np.ndarray:
        vec = np.asarray(vector, dtype=float)
        return np.array([sum(r * v for r, v in zip(row, vec)) for row in self.entries])


def int_det(rows) -> int:
    """Exact determinant of a small integer matrix via Fraction elimination."""
    m = [[Fraction(x) for x in row] for row in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] * inv
            if factor:
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    assert det.denominator == 1
    return int(det)


# ---------------------------------------------------------------------------
# Rauzy-Veech induction
# ---------------------------------------------------------------------------

def _compare_last(iet: Iet):
    """Return (kind_top, winner, loser) for the next move, or raise."""
    t_last = iet.perm.top[-1]
    b_last = iet.perm.bottom[-1]
    lt = iet.length(t_last)
    lb = iet.length(b_last)
    if abs(lt - lb) < TIE_TOL:
        raise TieError(
            f"last lengths tie within {TIE_TOL:g} "
            f"({t_last}={lt!r}, {b_last}={lb!r}): saddle connection")
    if lt > lb:
        return True, t_last, b_last
    return False, b_last, t_last


def _moved_rows(perm: Permutation, kind_top: bool, winner, loser):
    if kind_top:
        row = list(perm.bottom)
        row.pop()
        row.insert(row.index(winner) + 1, loser)
        return perm.top, tuple(row)
    row = list(perm.top)
    row.pop()
    row.insert(row.index(winner) + 1, loser)
    return tuple(row), perm.bottom


def rauzy_step(iet: Iet) -> tuple:
    """One elementary Rauzy-Veech move.

    Returns the induced exchange on the shortened interval (lengths left
    un-normalized, so ``old_lengths = E @ new_lengths`` exactly up to float
    rounding) together with the :class:`RauzyStep` record.
    """
    iet.perm.check_irreducible()
    kind_top, winner, loser = _compare_last(iet)
    new_top, new_bottom = _moved_rows(iet.perm, kind_top, winner, loser)
    new_perm = Permutation(new_top, new_bottom, iet.perm.labels)

    wi = iet.perm.index(winner)
    li = iet.perm.index(loser)
    new_lengths = iet.lengths.copy()
    new_lengths[wi] -= new_lengths[li]

    d = iet.d
    matrix = np.eye(d, dtype=np.int64)
    matrix[wi, li] = 1
    step = RauzyStep("top" if kind_top else "bottom", winner, loser, matrix)
    return Iet(new_perm, new_lengths, iet.log_scale), step


def advance_same_kind_run(top: list, bottom: list, lengths: list,
                          on_move, max_count: int = MAX_RUN) -> int:
    """Advance one maximal run of same-kind Rauzy moves, in place.

    Rows hold integer indices into ``lengths``.  Every elementary move (or
    batch of identical moves) is reported as ``on_move(winner, loser, mult)``,
    meaning the length/cohomology update ``lengths[w] -= mult * lengths[l]``
    / ``F[l] += mult * F[w]``.  Returns the number of elementary steps.

    During a run the winner letter is fixed and only its length changes, so
    the losers cycle through the letters following the winner in its row in
    a fixed order with constant lengths.  Whole cycles are batched with one
    division; this bounds the cost of any run, however long, by O(d) moves.
    """
    t_last = top[-1]
    b_last = bottom[-1]
    lt = lengths[t_last]
    lb = lengths[b_last]
    if abs(lt - lb) < TIE_TOL:
        raise TieError("saddle connection: tied last lengths")
    kind_top = lt > lb
    if kind_top:
        winner, row = t_last, bottom
    else:
        winner, row = b_last, top
    count = 0
    while True:
        loser = row[-1]
        lw = lengths[winner]
        ll = lengths[loser]
        if abs(lw - ll) < TIE_TOL:
            raise TieError("saddle connection inside Zorich run")
        if lw < ll:
            return count
        pos = row.index(winner)
        cycle = row[pos + 1:][::-1]
        cycle_sum = 0.0
        for i in cycle:
            cycle_sum += lengths[i]
        repeats = int(lw / cycle_sum) - 1
        if repeats >= 1:
            lengths[winner] = lw - repeats * cycle_sum
            for i in cycle:
                on_move(winner, i, repeats)
            count += repeats * len(cycle)
        else:
            lengths[winner] = lw - ll
            row.pop()
            row.insert(pos + 1, loser)
            on_move(winner, loser, 1)
            count += 1
        if count > max_count:
            raise DivergenceError(
                f"Zorich run exceeded {max_count} elementary steps")


def zorich_step(iet: Iet, max_count: int = MAX_RUN) -> tuple:
    """One Zorich-accelerated step: a maximal run of same-kind Rauzy moves.

    The returned exchange is renormalized to total length 1, with the removed
    factor absorbed into ``log_scale``.  Also returns the product of the
    run's elementary matrices and the run length.

    Raises ``DivergenceError`` when the run exceeds ``max_count`` elementary
    steps, which signals near-rational length data.
    """
    iet.perm.check_irreducible()
    d = iet.d
    labels = iet.perm.labels
    index = {a: i for i, a in enumerate(labels)}
    top = [index[a] for a in iet.perm.top]
    bottom = [index[a] for a in iet.perm.bottom]
    lengths = [float(x) for x in iet.lengths]

    matrix = VisitationMatrix.identity(d)
    count = advance_same_kind_run(
        top, bottom, lengths,
        matrix.right_multiply_elementary, max_count)

    total = sum(lengths)
    new_perm = Permutation(tuple(labels[i] for i in top),
                           tuple(labels[i] for i in bottom), labels)
    new = Iet(new_perm, np.array(lengths) / total,
              iet.log_scale + math.log(total))
    return new, matrix, count


# ---------------------------------------------------------------------------
# Evaluation and genericity checks
# ---------------------------------------------------------------------------

def apply(iet: Iet, x: float) -> float:
    """Evaluate the exchange map at ``x``.

    Raises ``BoundaryError`` when ``x`` is within ``1e-14`` of an interior
    discontinuity, where the map is ambiguous.
    """
    breaks = iet.top_breaks()
    if not (0.0 <= x < breaks[-1]):
        raise ValueError(f"x={x!r} outside the domain [0, {breaks[-1]!r})")
    for b in breaks[1:-1]:
        if abs(x - b) < TIE_TOL:
            raise BoundaryError(f"x={x!r} on a discontinuity")
    k = int(np.searchsorted(breaks, x, side="right")) - 1
    return x + iet.offsets()[iet.perm.top[k]]


class _FastIet:
    """Precomputed breakpoints/offsets for long orbit loops."""

    def __init__(self, iet: Iet):
        breaks = iet.top_breaks()
        offs = iet.offsets()
        self.breaks = [float(b) for b in breaks[1:-1]]
        self.offsets = [float(offs[a]) for a in iet.perm.top]
        self.total = float(breaks[-1])
        self.d = iet.d

    def letter(self, x: float) -> int:
        """Index (in top order) of the subinterval containing x."""
        k = 0
        for b in self.breaks:
            if x < b:
                return k
            k += 1
        return k

    def step(self, x: float) -> tuple:
        k = self.letter(x)
        return x + self.offsets[k], k


def keane_check(iet: Iet, n: int, tol: float = 1e-12) -> bool:
    """True iff no discontinuity orbit hits a discontinuity within n steps."""
    fast = _FastIet(iet)
    breaks = fast.breaks
    if not breaks:
        return True
    for start in breaks:
        x = start
        for _ in range(n):
            x, _ = fast.step(x)
            for b in breaks:
                if abs(x - b) < tol:
                    return False
    return True


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

#: Named permutations for the default stratum catalog.  The reversal
#: permutation on d letters suspends to the hyperelliptic stratum component:
#: d=2 the torus, d=4 genus two with one 6-pi cone (H(2)), d=5 genus two
#: with two 4-pi cones (H(1,1)).
STRATUM_PERMUTATIONS = {
    "torus": (("A", "B"), ("B", "A")),
    "h2": (("A", "B", "C", "D"), ("D", "C", "B", "A")),
    "h11": (("A", "B", "C", "D", "E"), ("E", "D", "C", "B", "A")),
}


def stratum_permutation(name: str) -> Permutation:
    try:
        top, bottom = STRATUM_PERMUTATIONS[name]
    except KeyError:
        raise ValueError(f"unknown stratum {name!r}; "
                         f"choose from {sorted(STRATUM_PERMUTATIONS)}")
    return Permutation(top, bottom)


def random_iet(perm: Permutation, rng: np.random.Generator) -> Iet:
    """Uniform-simplex lengths (normalized exponentials) on a permutation."""
    lengths = rng.exponential(1.0, size=perm.d)
    return Iet(perm, lengths / lengths.sum())


def golden_rotation() -> Iet:
    """The 2-exchange whose rotation number is the golden mean."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    return Iet(stratum_permutation("torus"), np.array([phi, 1.0 - phi]))
