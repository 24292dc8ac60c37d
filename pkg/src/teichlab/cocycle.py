"""Kontsevich-Zorich cocycle over Rauzy-Veech-Zorich renormalization.

The discrete cocycle acts on cohomology frames by the transposes of the
induction matrices and preserves the moving symplectic subspace
``Im(Omega_pi)`` together with the intersection pairing (exactly, in integer
arithmetic: ``E.T @ Omega @ E = Omega'``).  Lyapunov exponents are extracted
by periodic QR re-orthonormalization, with time measured by the accumulated
Teichmueller time (the sum of ``-log`` length-renormalization factors), so
the raw top exponent is 1 and reported spectra are normalized exactly by the
raw top exponent.

Normalized exponents of the discrete accelerated cocycle are identified with
the continuous-flow exponents; this standard roof-function identification is
an external modeling assumption, see the package README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .errors import ConvergenceError
from .iet import Iet, Permutation, random_iet, stratum_permutation


@dataclass(frozen=True)
class OmegaForm:
    """Antisymmetric intersection form attached to a permutation."""

    matrix: np.ndarray
    rank: int

    @property
    def genus(self) -> int:
        return self.rank // 2


def omega(perm: Permutation) -> OmegaForm:
    """Intersection form: Omega[a, b] = +1 iff a precedes b on top and
    follows b on bottom (indices in alphabet order)."""
    perm.check_irreducible()
    d = perm.d
    index = {a: i for i, a in enumerate(perm.labels)}
    top = [index[a] for a in perm.top]
    bottom = [index[a] for a in perm.bottom]
    form = _engine.omega_matrix(top, bottom, d)
    _, rank = _engine.symplectic_subspace(form)
    if rank % 2:
        raise ValueError("intersection form has odd rank")
    return OmegaForm(form, rank)


def symplectic_pairing(form: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """Symplectic pairing of vectors in Im(Omega).

    For u = Omega a, v = Omega b the invariant pairing is a^T Omega b, which
    in terms of the image vectors is -u^T pinv(Omega) v.
    """
    pinv = np.linalg.pinv(np.asarray(form, dtype=float))
    return float(np.real(-(u @ pinv @ v)))


@dataclass
class CocycleFrame:
    """Snapshot of an evolving orthonormal frame in Im(Omega)."""

    vectors: np.ndarray          # d x 2g, orthonormal columns
    log_norms: np.ndarray        # accumulated log growth per column
    teich_time: float
    steps: int


@dataclass
class ExponentEstimate:
    """Normalized Lyapunov spectrum of one renormalization run."""

    lambdas: np.ndarray          # 2g values, descending, lambdas[0] == 1
    stderr: np.ndarray           # bootstrap standard errors (stderr[0] == 0)
    steps: int
    teich_time: float
    raw: np.ndarray = None       # un-normalized exponents (log growth / time)
    frame: CocycleFrame = None
    stderr_defects: np.ndarray = None   # bootstrap errors of lam_i+lam_{2g+1-i}
    block_lognorms: np.ndarray = field(default=None, repr=False)
    block_teich: np.ndarray = field(default=None, repr=False)

    @property
    def genus(self) -> int:
        return len(self.lambdas) // 2

    def raw_top_series(self) -> np.ndarray:
        """Running raw top exponent at every QR checkpoint."""
        cum = np.cumsum(self.block_lognorms[:, 0])
        return cum / self.block_teich

    def stability(self) -> float:
        """Relative drift of the raw top exponent over the last half-run."""
        series = self.raw_top_series()
        half = len(series) // 2
        tail = series[half:]
        return float(np.max(np.abs(tail - series[-1])) / abs(series[-1]))


def _initial_frame(form: np.ndarray, rank: int, rng: np.random.Generator):
    basis, _ = _engine.symplectic_subspace(form)
    coeffs = rng.standard_normal((rank, rank))
    q, _ = np.linalg.qr(coeffs)
    return basis @ q


def _resolve_source(source, rng: np.random.Generator) -> Iet:
    if isinstance(source, Iet):
        return source
    if isinstance(source, str):
        return random_iet(stratum_permutation(source), rng)
    raise TypeError("source must be an Iet or a stratum name")


def kz_exponents(source, steps: int, qr_period: int = 10,
                 rng_seed: int = 0) -> ExponentEstimate:
    """Estimate the Kontsevich-Zorich spectrum along one Zorich orbit.

    Parameters
    ----------
    source : Iet or str
        Starting exchange, or a stratum name ("torus", "h2", "h11") whose
        length simplex is sampled with the seeded generator.
    steps : int
        Number of Zorich-accelerated steps; at least 10**4.
    qr_period : int
        Re-orthonormalize every this many Zorich steps (1..100).
    rng_seed : int
        Seeds the length sample, the initial frame and the bootstrap;
        identical seeds reproduce the estimate bit for bit.
    """
    steps = int(steps)
    if steps < 10 ** 4:
        raise ValueError("steps must be at least 10^4 for a meaningful estimate")
    if not 1 <= qr_period <= 100:
        raise ValueError("qr_period must lie in [1, 100]")
    rng = np.random.default_rng(rng_seed)
    iet = _resolve_source(source, rng)

    form = omega(iet.perm)
    frame0 = _initial_frame(form.matrix, form.rank, rng)
    trace = _engine.run_frame_forward(iet, steps, qr_period, frame0)

    log_norms = trace.block_lognorms.sum(axis=0)
    raw = log_norms / trace.teich_time
    lambdas = raw / raw[0]
    stderr, stderr_defects = _bootstrap_stderr(trace.block_lognorms, rng)

    frame = CocycleFrame(trace.frame, log_norms, trace.teich_time, steps)
    return ExponentEstimate(lambdas=lambdas, stderr=stderr, steps=steps,
                            teich_time=trace.teich_time, raw=raw, frame=frame,
                            stderr_defects=stderr_defects,
                            block_lognorms=trace.block_lognorms,
                            block_teich=trace.block_teich)


def _bootstrap_stderr(block_lognorms: np.ndarray, rng: np.random.Generator,
                      n_macro: int = 100, n_resample: int = 200):
    """Block-bootstrap errors of the normalized exponents and of the
    symmetry defects ``lambda_i + lambda_{2g+1-i}``.

    QR blocks are grouped into contiguous macro-blocks to soften serial
    correlation; normalized exponents are ratios of block sums, so the
    Teichmueller time cancels.
    """
    n_blocks, m = block_lognorms.shape
    n_macro = min(n_macro, n_blocks)
    edges = np.linspace(0, n_blocks, n_macro + 1, dtype=int)
    macro = np.add.reduceat(block_lognorms, edges[:-1], axis=0)
    samples = np.empty((n_resample, m))
    for b in range(n_resample):
        pick = rng.integers(0, n_macro, size=n_macro)
        sums = macro[pick].sum(axis=0)
        samples[b] = sums / sums[0]
    defects = samples + samples[:, ::-1]
    return samples.std(axis=0, ddof=1), defects.std(axis=0, ddof=1)


@dataclass
class SpectrumReport:
    """Booleans of the structural spectrum checks (None when vacuous)."""

    symmetry: bool
    gap: bool | None
    hyperbolic: bool | None
    symmetry_defects: np.ndarray
    lambdas: np.ndarray
    stderr: np.ndarray


#: Numerical-zero allowance for the symmetry defects; the symplectic
#: determinant identity makes some defects vanish to rounding, where the
#: bootstrap error is also exactly zero.
DEFECT_FLOOR = 1e-6


def spectrum_checks(est: ExponentEstimate) -> SpectrumReport:
    """Check spectral symmetry, the spectral gap and KZ-hyperbolicity.

    symmetry:    |lambda_i + lambda_{2g+1-i}| < 3 * stderr of that defect
                 (plus a 1e-6 rounding floor), for all i;
    gap:         lambda_2 < 1 - 3 * stderr_2          (None when g = 1);
    hyperbolic:  lambda_g > 3 * stderr_g              (None when g = 1).
    """
    if est.steps < 10 ** 5:
        raise ValueError("spectrum checks need a run of at least 10^5 steps")
    lam = est.lambdas
    se = est.stderr
    two_g = len(lam)
    g = two_g // 2
    defects = np.array([lam[i] + lam[two_g - 1 - i] for i in range(two_g)])
    if est.stderr_defects is not None:
        combined = est.stderr_defects
    else:
        combined = np.array([math.hypot(se[i], se[two_g - 1 - i])
                             for i in range(two_g)])
    symmetry = bool(np.all(np.abs(defects) < 3.0 * combined + DEFECT_FLOOR))
    if g == 1:
        gap = None
        hyperbolic = None
    else:
        gap = bool(lam[1] < 1.0 - 3.0 * se[1])
        hyperbolic = bool(lam[g - 1] > 3.0 * se[g - 1])
    return SpectrumReport(symmetry, gap, hyperbolic, defects, lam, se)


@dataclass
class OseledecSubspaces:
    """Unstable/stable subspaces estimated at the midpoint of a run window."""

    e_plus: np.ndarray           # d x g, orthonormal
    e_minus: np.ndarray          # d x g, orthonormal
    omega_mid: np.ndarray        # intersection form at the midpoint
    angle_plus: float            # two-frame consistency diagnostics
    angle_minus: float
    steps: int


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of two orthonormal frames."""
    sv = np.linalg.svd(a.T @ b, compute_uv=False)
    return np.arccos(np.clip(sv, -1.0, 1.0))


def oseledec_subspaces(seed_iet: Iet, steps: int, rng_seed: int = 0,
                       qr_period: int = 10,
                       angle_tol: float = 1e-3) -> OseledecSubspaces:
    """Estimate E+ and E- at the midpoint of a 2*steps window.

    E+ comes from pushing a frame forward over the first half (most-expanded
    directions), E- from pushing a frame backward from the far end of the
    second half with the exact elementary inverses on the reversed move
    sequence.  Both estimates live at the same midpoint, so transversality
    and Lagrangian checks are meaningful.  Each side is computed from two
    independently seeded frames; disagreement beyond ``angle_tol`` raises
    ``ConvergenceError``.
    """
    steps = int(steps)
    rng = np.random.default_rng(rng_seed)
    path = _engine.record_path(seed_iet, 2 * steps)
    snapshots = _engine.states_along(path)
    half_moves = snapshots[steps - 1][0]
    d = seed_iet.d

    form0 = omega(seed_iet.perm)
    g = form0.genus
    mid_top, mid_bottom = snapshots[steps - 1][1], snapshots[steps - 1][2]
    omega_mid = _engine.omega_matrix(list(mid_top), list(mid_bottom), d)
    end_top, end_bottom = snapshots[-1][1], snapshots[-1][2]
    omega_end = _engine.omega_matrix(list(end_top), list(end_bottom), d)

    triples = list(zip(path.winners, path.losers, path.mults))
    start_rows = (tuple(path.start.top), tuple(path.start.bottom))
    fwd_segments = _segments(triples[:half_moves], snapshots, 0, qr_period, d,
                             form0.rank, forward=True, start_rows=start_rows)
    bwd_segments = _segments(triples[half_moves:], snapshots, half_moves,
                             qr_period, d, form0.rank, forward=False,
                             start_rows=start_rows)

    plus = []
    minus = []
    for k in range(2):
        f0 = _initial_frame(form0.matrix, form0.rank, rng)
        plus.append(_replay(fwd_segments, f0, "forward")[:, :g])
        f1 = _initial_frame(omega_end, form0.rank, rng)
        minus.append(_replay(bwd_segments, f1, "inverse")[:, :g])

    angle_plus = float(np.max(principal_angles(plus[0], plus[1])))
    angle_minus = float(np.max(principal_angles(minus[0], minus[1])))
    if angle_plus > angle_tol or angle_minus > angle_tol:
        raise ConvergenceError(
            f"subspace estimates disagree: E+ angle {angle_plus:.2e}, "
            f"E- angle {angle_minus:.2e} (tol {angle_tol:g})")
    return OseledecSubspaces(plus[0], minus[0], omega_mid,
                             angle_plus, angle_minus, steps)


def _segments(triples, snapshots, offset, qr_period, d, rank, forward,
              start_rows):
    """Split a move list into QR segments aligned with Zorich steps.

    Returns a list of (chunk_of_triples, omega_basis_or_None); for backward
    replays the chunks come from the reversed move order and the projection
    basis is the form at the earlier end of the chunk.
    """
    need_projection = rank < d
    bounds = [m - offset for m, _, _ in snapshots
              if offset < m <= offset + len(triples)]
    seg = []
    prev = 0
    for i in range(qr_period - 1, len(bounds), qr_period):
        seg.append((prev, bounds[i]))
        prev = bounds[i]
    if prev < len(triples):
        seg.append((prev, len(triples)))

    def basis_at(move_index):
        if not need_projection:
            return None
        # snapshot with the largest move count <= absolute index
        abs_idx = offset + move_index
        top, bottom = start_rows
        for count, t, b in snapshots:
            if count > abs_idx:
                break
            top, bottom = t, b
        form = _engine.omega_matrix(list(top), list(bottom), d)
        basis, _ = _engine.symplectic_subspace(form)
        return basis

    out = []
    if forward:
        for a, b in seg:
            out.append((triples[a:b], basis_at(b)))
    else:
        n = len(triples)
        for a, b in seg[::-1]:
            chunk = triples[a:b][::-1]
            out.append((chunk, basis_at(a)))
    return out


def _replay(segments, frame, mode):
    d, m = frame.shape
    rows = [list(map(float, frame[i])) for i in range(d)]
    for chunk, basis in segments:
        _engine._push_rows(rows, chunk, m, mode)
        fmat = np.array(rows)
        if basis is not None:
            fmat = basis @ (basis.T @ fmat)
        q, _ = np.linalg.qr(fmat)
        rows = [list(map(float, q[i])) for i in range(d)]
    return np.array(rows)
