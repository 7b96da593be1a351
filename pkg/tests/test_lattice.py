import numpy as np
import pytest

from latscat import cxmat
from latscat.errors import BandEdgeError, SupportOverflowError
from latscat.lattice import (
    CyclicSystem,
    Potential,
    TailSeq,
    build_cyclic,
    build_field,
    solve_L,
    solve_L_seq,
    solve_R,
    solve_R_seq,
)
from latscat.spectral import lambda_site


def test_potential_basics():
    v = Potential(-1, [0.5, 0.0, -0.25])
    assert v.support_hi == 1
    assert v.value(-1) == 0.5 and v.value(2) == 0.0
    assert v.norm_inf() == 0.5
    v2 = Potential.from_json(v.to_json())
    assert v2.support_lo == v.support_lo
    assert np.array_equal(v2.values, v.values)


def test_potential_truncation():
    v = Potential(1, [1.0, 2.0, 3.0, 4.0])
    vt = v.truncated(3)
    assert vt.support_hi == 2 and vt.value(3) == 0.0


def test_build_field_free():
    fld = build_field(Potential(1, np.zeros(0)), 1.0 + 1.0j)
    assert fld.omega_support == ()
    assert fld.lam_at(17) == fld.lam_tilde


def test_build_field_constant_plateau():
    v = Potential(2, [0.3, 0.3, 0.3])
    fld = build_field(v, 0.5 + 0.8j)
    assert fld.omega_support == (1, 4)


def test_build_field_single_site():
    v = Potential(0, [0.2])
    fld = build_field(v, 2.0j)
    assert fld.omega_support == (-1, 0)
    # the two jumps cancel: free -> shifted -> free
    assert abs(fld.omega[-1] + fld.omega[0]) < 1e-15
    assert abs(fld.omega[-1] - (lambda_site(2.0j, 0.2) - lambda_site(2.0j, 0.0))) < 1e-15


def test_band_edge_propagates():
    with pytest.raises(BandEdgeError):
        build_field(Potential(0, [0.5]), 2.5)  # z - v = 2 at the site


def test_solve_L_free_basis():
    fld = build_field(Potential(1, np.zeros(0)), 0.4 + 0.9j)
    lt = fld.lam_tilde
    f = solve_L(fld, {0: 1.0}, range(-3, 8))
    for i, n in enumerate(range(-3, 8)):
        want = lt ** (n - 1) if n >= 1 else 0.0
        assert abs(f[i] - want) < 1e-14


def test_solve_R_free_basis():
    fld = build_field(Potential(1, np.zeros(0)), 0.4 + 0.9j)
    lt = fld.lam_tilde
    f = solve_R(fld, {0: 1.0}, range(-6, 3))
    for i, n in enumerate(range(-6, 3)):
        want = lt ** (-1 - n) if n <= -1 else 0.0
        assert abs(f[i] - want) < 1e-14


def test_solve_zero_input():
    fld = build_field(Potential(0, [0.3]), 1.0j)
    assert np.all(solve_L(fld, {}, range(-2, 3)) == 0)
    assert np.all(solve_R(fld, {}, range(-2, 3)) == 0)


@pytest.mark.parametrize("seed", range(5))
def test_solve_residuals_variable_field(seed):
    rng = np.random.default_rng(seed)
    v = Potential(-3, rng.uniform(-0.6, 0.6, 7))
    z = complex(rng.uniform(-2, 2), rng.uniform(0.2, 1.5))
    fld = build_field(v, z)
    g = {int(n): complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for n in range(-3, 4)}
    window = list(range(-11, 12))
    f = solve_L(fld, g, window)
    for i, n in enumerate(window[:-1]):
        res = f[i + 1] - fld.lam_at(n) * f[i] - g.get(n, 0.0)
        assert abs(res) < 1e-12
    h = solve_R(fld, g, window)
    for i, n in enumerate(window[1:], start=1):
        res = h[i - 1] - fld.lam_at(n) * h[i] - g.get(n, 0.0)
        assert abs(res) < 1e-12


def test_tail_evaluation_is_exact_geometric():
    fld = build_field(Potential(0, [0.4, -0.2]), 0.3 + 0.7j)
    lt = fld.lam_tilde
    seq = solve_L_seq(fld, TailSeq.from_pairs({0: 1.0 + 0.0j}, lt))
    far = seq.at(seq.hi + 25)
    assert abs(far - seq.at(seq.hi) * lt**25) < 1e-15
    seq2 = solve_R_seq(fld, TailSeq.from_pairs({0: 1.0 + 0.0j}, lt))
    far2 = seq2.at(seq2.lo - 25)
    assert abs(far2 - seq2.at(seq2.lo) * lt**25) < 1e-15


def test_solve_rejects_on_band():
    fld = build_field(Potential(0, [0.3]), 0.5)  # real z: |lambda_tilde| = 1
    with pytest.raises(ValueError):
        solve_L(fld, {0: 1.0}, [0])


def test_resonant_tail_rejected():
    fld = build_field(Potential(0, [0.3]), 1.0j)
    lt = fld.lam_tilde
    right_tailed = solve_L_seq(fld, TailSeq.from_pairs({0: 1.0 + 0.0j}, lt))
    with pytest.raises(NotImplementedError):
        solve_L_seq(fld, right_tailed)
    left_tailed = solve_R_seq(fld, TailSeq.from_pairs({0: 1.0 + 0.0j}, lt))
    with pytest.raises(NotImplementedError):
        solve_R_seq(fld, left_tailed)


def test_build_cyclic_free_reduces():
    sys = build_cyclic(Potential(1, np.zeros(0)), 1.0 + 0.5j, 4)
    assert np.abs(sys.K - sys.K0).max() < 1e-15
    assert np.abs(sys.Om).max() == 0.0


def test_build_cyclic_hand_assembled():
    z = 1.0 + 1.0j
    sys = build_cyclic(Potential(0, [0.2]), z, 1)
    l0 = lambda_site(z, 0.0)
    lv = lambda_site(z, 0.2)
    # sites -1, 0, 1 with the shift L e_j = e_{j-1}: ones at (j-1, j) cyclically
    want_L = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=complex)
    assert np.array_equal(sys.L, want_L)
    assert np.array_equal(sys.R, want_L.T)
    assert np.allclose(np.diag(sys.Lam), [l0, lv, l0])
    assert np.allclose(np.diag(sys.Om), [lv - l0, l0 - lv, 0.0])
    want_K = want_L + want_L.T - np.diag([l0 + 1 / l0, lv + 1 / lv, l0 + 1 / l0])
    assert np.abs(sys.K - want_K).max() < 1e-15


def test_cyclic_shifts_unitary():
    sys = build_cyclic(Potential(0, [0.1, 0.2]), 0.5j, 5)
    assert np.array_equal(sys.R @ sys.L, np.eye(sys.dim))


def test_cyclic_wrap_term_vanishes_for_interior_support():
    sys = build_cyclic(Potential(-1, [0.3, 0.1]), 1.0j, 6)
    assert sys.Om[-1, -1] == 0.0


def test_cyclic_support_overflow():
    with pytest.raises(SupportOverflowError):
        build_cyclic(Potential(0, np.full(9, 0.1)), 1.0j, 3)


@pytest.mark.parametrize("seed", range(8))
def test_cyclic_shift_factorization_identities(seed):
    # the three cyclic factorization identities, entrywise
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    width = int(rng.integers(1, min(5, 2 * n - 1) + 1))
    lo = int(rng.integers(-n + 1, n - width + 1))
    v = Potential(lo, rng.uniform(-0.5, 0.5, width))
    z = complex(rng.uniform(-3, 3), rng.uniform(0.1, 2.0))
    sys = build_cyclic(v, z, n)
    lm, rm = sys.L - sys.Lam, sys.R - sys.Lam
    assert np.abs(lm @ rm - (-sys.Lam @ sys.K - sys.Om @ sys.L)).max() < 1e-12
    assert np.abs(lm @ rm - (-sys.K @ sys.Lam - sys.R @ sys.Om)).max() < 1e-12
    assert np.abs(rm @ lm - (-sys.K @ sys.Lam + sys.Om @ sys.L)).max() < 1e-12


def test_resolvent_norm_shape():
    # measured operator norms follow C (Im z)^{-1} (1 + Im z); C fitted here
    v = Potential(-2, [0.4, -0.3, 0.2, 0.1, -0.2])
    fits = []
    for im in (0.1, 0.2, 0.5, 1.0, 2.0):
        sys = build_cyclic(v, 0.7 + 1j * im, 8)
        for mat in (sys.L - sys.Lam, sys.R - sys.Lam):
            nrm = np.linalg.norm(np.linalg.inv(mat), 2)
            fits.append(nrm * im / (1.0 + im))
    c_fit = max(fits)
    assert np.isfinite(c_fit) and c_fit > 0
    print(f"resolvent-norm shape constant C ~ {c_fit:.3f}")


def test_omega_hs_norm_vs_delta_v():
    # ||Omega_n||_HS <= C ||delta v||_2 across a family; ratio reported
    z = 0.3 + 1.0j
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(20):
        width = int(rng.integers(1, 9))
        v = Potential(int(rng.integers(-4, 2)), rng.uniform(-0.5, 0.5, width))
        sys = build_cyclic(v, z, 12)
        ratios.append(cxmat.hs_norm(sys.Om) / v.delta_norm2())
    assert np.isfinite(ratios).all()
    assert max(ratios) < 10.0
    print(f"HS-norm ratio ||Omega||/||delta v|| <= {max(ratios):.3f}")
