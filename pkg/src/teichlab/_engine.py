"""Long-run Zorich renormalization loops.

This module contains the hot paths shared by the cocycle and ergodic
modules: plain-python state (integer-labelled rows, list lengths) with
rank-one row updates for cohomology frames.  Same-kind runs in the stable
configuration are batched by floor division exactly as in
:func:`teichlab.iet.zorich_step`; a batched move of multiplicity ``m``
applies ``I + m * e[winner, loser]`` in one O(d) update.

Cocycle conventions (verified exactly in the tests): with
``lengths_old = E @ lengths_new`` the induction matrix ``E`` conjugates the
intersection forms, ``E.T @ Omega @ E = Omega'``, and the cocycle acting on
cohomology frames is ``E.T``, whose action is ``F[loser] += m * F[winner]``.
Its inverse is ``F[loser] -= m * F[winner]`` and its transpose is
``F[winner] += m * F[loser]``.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass

import numpy as np

from .errors import TieError
from .iet import (
    MAX_RUN,
    TIE_TOL,
    Iet,
    Permutation,
    advance_same_kind_run,
)


def omega_matrix(top, bottom, d: int) -> np.ndarray:
    """Intersection form: +1 when a precedes b on top and follows on bottom."""
    ti = [0] * d
    bi = [0] * d
    for pos, a in enumerate(top):
        ti[a] = pos
    for pos, a in enumerate(bottom):
        bi[a] = pos
    form = np.zeros((d, d), dtype=np.int64)
    for a in range(d):
        for b in range(d):
            if ti[a] < ti[b] and bi[a] > bi[b]:
                form[a][b] = 1
            elif ti[a] > ti[b] and bi[a] < bi[b]:
                form[a][b] = -1
    return form


def symplectic_subspace(form: np.ndarray, tol: float = 1e-9):
    """Orthonormal basis of Im(Omega) and its float rank 2g."""
    u, s, _ = np.linalg.svd(np.asarray(form, dtype=float))
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank], rank


def kernel_basis(form: np.ndarray, rank: int) -> np.ndarray:
    u, _, _ = np.linalg.svd(np.asarray(form, dtype=float))
    return u[:, rank:]


class IntState:
    """Induction state over integer labels 0..d-1."""

    def __init__(self, iet: Iet):
        self.labels = iet.perm.labels
        index = {a: i for i, a in enumerate(self.labels)}
        self.d = iet.d
        self.top = [index[a] for a in iet.perm.top]
        self.bottom = [index[a] for a in iet.perm.bottom]
        self.lengths = [float(x) for x in iet.lengths]
        self.log_scale = float(iet.log_scale)

    def to_iet(self) -> Iet:
        top = tuple(self.labels[i] for i in self.top)
        bottom = tuple(self.labels[i] for i in self.bottom)
        perm = Permutation(top, bottom, self.labels)
        return Iet(perm, np.array(self.lengths), self.log_scale)

    def omega(self) -> np.ndarray:
        return omega_matrix(self.top, self.bottom, self.d)


def _renormalize(state: IntState) -> float:
    """Rescale to unit total length; return the Teichmueller time increment."""
    lengths = state.lengths
    total = 0.0
    for x in lengths:
        total += x
    inv = 1.0 / total
    for i in range(state.d):
        lengths[i] *= inv
    dt = -math.log(total)
    state.log_scale -= dt
    return dt


@dataclass
class ExponentTrace:
    """Per-QR-block accumulators from a frame run."""

    block_lognorms: np.ndarray   # (n_blocks, m) log diag(R) per QR event
    block_teich: np.ndarray      # (n_blocks,) cumulative Teichmueller time
    teich_time: float
    steps: int
    state: IntState
    frame: np.ndarray            # orthonormal d x m frame after the last QR


#: Re-orthonormalize early once the frame may have grown by this log-factor.
#: Between QR passes the most-contracted column is represented relative to
#: entries of size ~e^growth, so its log-norm keeps roughly
#: ``16 - 2*growth/ln(10)`` digits; 12 keeps the determinant identity of the
#: symplectic cocycle accurate to ~1e-9 over 10^6 steps.
QR_GROWTH_LIMIT = 12.0


def run_frame_forward(iet: Iet, n_steps: int, qr_period: int,
                      frame: np.ndarray, max_run: int = MAX_RUN) -> ExponentTrace:
    """Push an orthonormal frame through n_steps Zorich steps of E^T.

    The frame must span a subspace of Im(Omega) of the starting permutation;
    when Omega is singular the frame is re-projected onto the moving
    symplectic subspace at every QR pass (the kernel directions carry zero
    exponents and would otherwise pollute the most-contracted columns).

    QR passes run every ``qr_period`` Zorich steps, or sooner whenever the
    accumulated growth bound exceeds ``QR_GROWTH_LIMIT`` (large batched
    multipliers can expand the frame by many orders of magnitude in a single
    step, which would erase the contracted directions in double precision).
    """
    state = IntState(iet)
    d, m = frame.shape
    rows = [list(map(float, frame[i])) for i in range(d)]
    has_kernel = m < d
    growth = [0.0]

    def on_move(winner, loser, mult):
        rw = rows[winner]
        rl = rows[loser]
        if mult == 1:
            for j in range(m):
                rl[j] += rw[j]
            growth[0] += 0.6931471805599453
        else:
            fm = float(mult)
            for j in range(m):
                rl[j] += fm * rw[j]
            growth[0] += math.log(1.0 + fm)

    block_lognorms = []
    block_teich = []
    teich = 0.0
    since_qr = 0
    last_q = np.array(rows)
    for step in range(n_steps):
        advance_same_kind_run(state.top, state.bottom, state.lengths,
                              on_move, max_run)
        teich += _renormalize(state)
        since_qr += 1
        if (since_qr >= qr_period or growth[0] >= QR_GROWTH_LIMIT
                or step + 1 == n_steps):
            since_qr = 0
            growth[0] = 0.0
            fmat = np.array(rows)
            if has_kernel:
                basis, _ = symplectic_subspace(state.omega())
                fmat = basis @ (basis.T @ fmat)
            q, r = np.linalg.qr(fmat)
            block_lognorms.append(np.log(np.abs(np.diag(r))))
            block_teich.append(teich)
            rows = [list(map(float, q[i])) for i in range(d)]
            last_q = q
    return ExponentTrace(np.array(block_lognorms), np.array(block_teich),
                         teich, n_steps, state, last_q)


@dataclass
class ZorichPath:
    """Recorded move sequence of a Zorich run (batched moves)."""

    winners: array
    losers: array
    mults: list
    step_moves: array           # number of recorded moves per Zorich step
    log_scales: array           # Teichmueller increment per Zorich step
    start: IntState
    final: IntState

    @property
    def n_steps(self) -> int:
        return len(self.step_moves)

    def teich_times(self) -> np.ndarray:
        return np.cumsum(self.log_scales)


def record_path(iet: Iet, n_steps: int, max_run: int = MAX_RUN) -> ZorichPath:
    """Run n_steps Zorich steps recording every (winner, loser, mult) move."""
    state = IntState(iet)
    start = IntState(iet)
    winners = array("b")
    losers = array("b")
    mults = []
    step_moves = array("l")
    log_scales = array("d")
    def on_move(winner, loser, mult):
        winners.append(winner)
        losers.append(loser)
        mults.append(mult)

    for _ in range(n_steps):
        before = len(winners)
        advance_same_kind_run(state.top, state.bottom, state.lengths,
                              on_move, max_run)
        step_moves.append(len(winners) - before)
        log_scales.append(_renormalize(state))
    return ZorichPath(winners, losers, mults, step_moves, log_scales,
                      start, state)


def _push_rows(rows, moves, m, mode):
    """Apply a batch of recorded moves to frame rows in the given mode.

    mode "forward":    F[l] += mult * F[w]     (cocycle E^T)
    mode "inverse":    F[l] -= mult * F[w]     ((E^T)^{-1}, use reversed order)
    mode "transpose":  F[w] += mult * F[l]     (E, use reversed order)
    """
    if mode == "forward":
        for winner, loser, mult in moves:
            rw = rows[winner]
            rl = rows[loser]
            fm = float(mult)
            for j in range(m):
                rl[j] += fm * rw[j]
    elif mode == "inverse":
        for winner, loser, mult in moves:
            rw = rows[winner]
            rl = rows[loser]
            fm = float(mult)
            for j in range(m):
                rl[j] -= fm * rw[j]
    elif mode == "transpose":
        for winner, loser, mult in moves:
            rw = rows[winner]
            rl = rows[loser]
            fm = float(mult)
            for j in range(m):
                rw[j] += fm * rl[j]
    else:
        raise ValueError(mode)


def replay_frame(path: ZorichPath, frame: np.ndarray, mode: str,
                 qr_period: int = 10, reverse: bool = False,
                 project_state=None) -> np.ndarray:
    """Push a frame through a recorded path with periodic QR.

    With ``reverse=True`` the move sequence is traversed from the end; this
    is how the inverse and transpose cocycles are meant to be applied.
    ``project_state`` optionally supplies, per QR event, the Omega matrix to
    re-project onto (callable move_index -> Omega), used for singular forms.
    """
    d, m = frame.shape
    rows = [list(map(float, frame[i])) for i in range(d)]
    triples = list(zip(path.winners, path.losers, path.mults))
    if reverse:
        triples = triples[::-1]
    n = len(triples)
    chunk = max(1, qr_period * 3)
    done = 0
    while done < n:
        batch = triples[done:done + chunk]
        _push_rows(rows, batch, m, mode)
        done += len(batch)
        fmat = np.array(rows)
        if project_state is not None:
            basis = project_state(done)
            fmat = basis @ (basis.T @ fmat)
        q, _ = np.linalg.qr(fmat)
        rows = [list(map(float, q[i])) for i in range(d)]
    return np.array(rows)


def states_along(path: ZorichPath):
    """Iterate (move_index_after_step, IntState-like rows) per Zorich step.

    Returns a list of (cumulative_move_count, top, bottom) snapshots, one per
    Zorich step, reconstructed by replaying row moves only.
    """
    top = list(path.start.top)
    bottom = list(path.start.bottom)
    out = []
    moves_done = 0
    idx = 0
    for nmoves in path.step_moves:
        for _ in range(nmoves):
            winner = path.winners[idx]
            loser = path.losers[idx]
            idx += 1
            # The moved row is the one whose last letter lost (irreducibility
            # forbids the same letter ending both rows).
            row = top if top[-1] == loser else bottom
            row.pop()
            row.insert(row.index(winner) + 1, loser)
        moves_done += nmoves
        out.append((moves_done, tuple(top), tuple(bottom)))
    return out
