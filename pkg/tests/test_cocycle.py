import numpy as np
import pytest

from teichlab import _engine
from teichlab.cocycle import (
    ExponentEstimate,
    kz_exponents,
    omega,
    oseledec_subspaces,
    principal_angles,
    spectrum_checks,
    symplectic_pairing,
)
from teichlab.iet import (
    Iet,
    Permutation,
    golden_rotation,
    random_iet,
    rauzy_step,
    stratum_permutation,
    zorich_step,
)


# ---------------------------------------------------------------------------
# Intersection form
# ---------------------------------------------------------------------------

def test_omega_torus():
    form = omega(stratum_permutation("torus"))
    np.testing.assert_array_equal(form.matrix, [[0, 1], [-1, 0]])
    assert form.rank == 2 and form.genus == 1


def test_omega_h2_rank():
    form = omega(stratum_permutation("h2"))
    assert form.rank == 4 and form.genus == 2
    np.testing.assert_array_equal(form.matrix, -form.matrix.T)


def test_omega_h11_rank():
    form = omega(stratum_permutation("h11"))
    assert form.rank == 4 and form.genus == 2  # d=5: one-dimensional kernel


def test_omega_antisymmetric_random_permutations():
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = int(rng.integers(2, 6))
        while True:
            bottom = tuple(rng.permutation([chr(65 + i) for i in range(d)]))
            top = tuple(chr(65 + i) for i in range(d))
            perm = Permutation(top, bottom)
            if perm.is_irreducible():
                break
        form = omega(perm)
        np.testing.assert_array_equal(form.matrix, -form.matrix.T)
        assert form.rank % 2 == 0


# ---------------------------------------------------------------------------
# Symplecticity of the induction matrices (exact integer arithmetic)
# ---------------------------------------------------------------------------

def int_omega(perm):
    return [[int(x) for x in row] for row in omega(perm).matrix]


def mat_mult(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)]


def transpose(a):
    n = len(a)
    return [[a[j][i] for j in range(n)] for i in range(n)]


def test_single_step_conjugates_form_exactly():
    # E.T @ Omega @ E == Omega' in integer arithmetic, for single Rauzy
    # steps on d <= 4 over 100 random seeds.
    for seed in range(100):
        rng = np.random.default_rng(seed)
        name = ("torus", "h2")[seed % 2]
        iet = random_iet(stratum_permutation(name), rng)
        new, step = rauzy_step(iet)
        e = [[int(x) for x in row] for row in step.elementary_matrix]
        lhs = mat_mult(transpose(e), mat_mult(int_omega(iet.perm), e))
        assert lhs == int_omega(new.perm)


def test_zorich_product_conjugates_form_exactly():
    rng = np.random.default_rng(7)
    iet = random_iet(stratum_permutation("h2"), rng)
    form = int_omega(iet.perm)
    for _ in range(25):
        iet, matrix, _ = zorich_step(iet)
        b = matrix.entries
        form = mat_mult(transpose(b), mat_mult(form, b))
        assert form == int_omega(iet.perm)


# ---------------------------------------------------------------------------
# Exponent estimation
# ---------------------------------------------------------------------------

def test_torus_exponents_plus_minus_one():
    est = kz_exponents("torus", steps=100_000, rng_seed=1)
    assert est.lambdas[0] == 1.0
    assert est.lambdas[1] == pytest.approx(-1.0, abs=0.01)
    assert est.raw[0] == pytest.approx(1.0, abs=0.01)


def test_estimates_are_deterministic():
    a = kz_exponents("h2", steps=10_000, rng_seed=5)
    b = kz_exponents("h2", steps=10_000, rng_seed=5)
    assert np.array_equal(a.lambdas, b.lambdas)
    assert np.array_equal(a.stderr, b.stderr)
    assert a.teich_time == b.teich_time


def test_lambdas_sorted_descending_and_normalized():
    est = kz_exponents("h2", steps=20_000, rng_seed=2)
    assert est.lambdas[0] == 1.0
    assert np.all(np.diff(est.lambdas) <= 0)
    assert est.stderr[0] == 0.0


def test_raw_top_exponent_stable_and_near_one():
    est = kz_exponents("h2", steps=100_000, rng_seed=3)
    assert est.raw[0] == pytest.approx(1.0, abs=0.02)
    assert est.stability() < 0.01


def test_steps_precondition():
    with pytest.raises(ValueError):
        kz_exponents("torus", steps=100, rng_seed=0)
    with pytest.raises(ValueError):
        kz_exponents("torus", steps=10_000, qr_period=1000, rng_seed=0)


# ---------------------------------------------------------------------------
# Spectrum checks
# ---------------------------------------------------------------------------

def test_spectrum_checks_torus_vacuous():
    est = kz_exponents("torus", steps=100_000, rng_seed=1)
    report = spectrum_checks(est)
    assert report.symmetry
    assert report.gap is None
    assert report.hyperbolic is None


def test_spectrum_checks_h2_all_true():
    est = kz_exponents("h2", steps=150_000, rng_seed=4)
    report = spectrum_checks(est)
    assert report.symmetry
    assert report.gap is True
    assert report.hyperbolic is True


def test_spectrum_checks_negative_control():
    est = kz_exponents("h2", steps=150_000, rng_seed=4)
    bad = ExponentEstimate(
        lambdas=np.array([1.0, 1.2, -1.2, -1.0]),
        stderr=est.stderr, steps=est.steps, teich_time=est.teich_time,
        raw=est.raw, block_lognorms=est.block_lognorms,
        block_teich=est.block_teich)
    report = spectrum_checks(bad)
    assert report.gap is False


# ---------------------------------------------------------------------------
# Oseledec subspaces
# ---------------------------------------------------------------------------

def test_oseledec_torus_dual_vectors():
    sub = oseledec_subspaces(golden_rotation(), steps=100_000, rng_seed=0)
    assert sub.e_plus.shape == (2, 1) and sub.e_minus.shape == (2, 1)
    pairing = symplectic_pairing(sub.omega_mid, sub.e_plus[:, 0],
                                 sub.e_minus[:, 0])
    assert abs(pairing) > 0.1


def test_oseledec_h2_lagrangian_transverse():
    rng = np.random.default_rng(11)
    iet = random_iet(stratum_permutation("h2"), rng)
    sub = oseledec_subspaces(iet, steps=100_000, rng_seed=1)
    for frame in (sub.e_plus, sub.e_minus):
        assert frame.shape == (4, 2)
        for i in range(2):
            for j in range(2):
                pairing = symplectic_pairing(sub.omega_mid,
                                             frame[:, i], frame[:, j])
                assert abs(pairing) < 1e-3
    stacked = np.hstack([sub.e_plus, sub.e_minus])
    assert np.linalg.cond(stacked) < 1e6


def test_oseledec_two_seeds_agree_on_same_path():
    rng = np.random.default_rng(12)
    iet = random_iet(stratum_permutation("h2"), rng)
    a = oseledec_subspaces(iet, steps=100_000, rng_seed=1)
    b = oseledec_subspaces(iet, steps=100_000, rng_seed=2)
    assert np.max(principal_angles(a.e_minus, b.e_minus)) < 1e-3
    assert np.max(principal_angles(a.e_plus, b.e_plus)) < 1e-3


# ---------------------------------------------------------------------------
# Engine internals
# ---------------------------------------------------------------------------

def test_recorded_path_replay_matches_live_run():
    # Pushing a frame through the recorded moves must give the same
    # expanding subspace as pushing it live (QR cadences differ, so only
    # the well-conditioned top block is comparable).
    rng = np.random.default_rng(13)
    iet = random_iet(stratum_permutation("h2"), rng)
    path = _engine.record_path(iet, 200)
    live = _engine.run_frame_forward(iet, 200, qr_period=10,
                                     frame=np.eye(4))
    rows = [[float(x) for x in row] for row in np.eye(4)]
    triples = list(zip(path.winners, path.losers, path.mults))
    for start in range(0, len(triples), 10):
        _engine._push_rows(rows, triples[start:start + 10], 4, "forward")
        q, _ = np.linalg.qr(np.array(rows))
        rows = [[float(x) for x in row] for row in q]
    assert np.max(principal_angles(np.array(rows)[:, :2],
                                   live.frame[:, :2])) < 1e-6


def test_inverse_replay_undoes_forward():
    rng = np.random.default_rng(14)
    iet = random_iet(stratum_permutation("h11"), rng)
    path = _engine.record_path(iet, 50)
    triples = list(zip(path.winners, path.losers, path.mults))
    rows = [[float(x) for x in row] for row in np.eye(5)]
    _engine._push_rows(rows, triples, 5, "forward")
    _engine._push_rows(rows, triples[::-1], 5, "inverse")
    np.testing.assert_allclose(np.array(rows), np.eye(5), atol=1e-6)
