import numpy as np
import pytest

from purity_circuits.gates import XY, GateParams
from purity_circuits.protocols import build_brickwall, build_staircase
from purity_circuits.purity import half_vector, initial_vector, period_matrix, purity_series, steady_raw
from purity_circuits.spectral import (biorthogonality_error, count_in_annulus, even_half,
                                      even_indices, even_phi0, even_sector_matrix,
                                      expansion_report, extrapolate_tdl, full_spectrum,
                                      ninth_eigenvector, odd_layer_residual, phantom_sum,
                                      power_lambda2, power_lambda2_op, steady_even,
                                      toy_exceptional)


def report(n, prot, g=XY, mask=None):
    pairs = full_spectrum(even_sector_matrix(n, prot, g))
    return expansion_report(pairs, even_phi0(n), even_half(n, mask))


def test_even_sector_is_subspectrum():
    n = 4
    prot = build_staircase(n, "pbc")
    full = np.linalg.eigvals(period_matrix(n, prot, XY))
    sub = np.linalg.eigvals(even_sector_matrix(n, prot, XY))
    for z in sub:
        assert np.abs(full - z).min() < 1e-10


def test_steady_even_eigenvector():
    n = 8
    m = even_sector_matrix(n, build_brickwall(n, "obc"), GateParams(0.8, 0.5, 0.3))
    s = steady_even(n)
    assert np.abs(m @ s - s).max() < 1e-14
    assert np.abs(s @ m - s).max() < 1e-14


def test_two_unit_eigenvalues():
    n = 6
    for g in [XY, GateParams(0.7, 0.2, 0.1)]:
        lam = np.linalg.eigvals(period_matrix(n, build_staircase(n, "pbc"), g))
        assert np.sum(np.abs(lam - 1) < 1e-9) >= 2


@pytest.mark.parametrize("n", [8, 10])
def test_ninth_in_brickwall_spectrum(n):
    lam = np.linalg.eigvals(even_sector_matrix(n, build_brickwall(n, "pbc"), XY))
    assert np.abs(lam - 1 / 9).min() < 1e-10


def test_biorthonormal_pairs_and_residuals():
    n = 8
    m = even_sector_matrix(n, build_staircase(n, "pbc"), GateParams(0.9, 0.7, 0.2))
    pairs = full_spectrum(m)
    assert biorthogonality_error(pairs) < 1e-10
    for p in pairs:
        assert np.abs(m @ p.right - p.lam * p.right).max() < 1e-10
        assert np.abs(p.left @ m - p.lam * p.left).max() < 1e-10
    mods = [abs(p.lam) for p in pairs]
    assert mods == sorted(mods, reverse=True)


def test_reconstruction_matches_trace():
    n = 10
    for prot in [build_staircase(n, "obc"), build_brickwall(n, "pbc")]:
        rep = report(n, prot)
        tr = purity_series(n, prot, XY, None, 10)
        rec = rep.reconstruct(np.arange(11))
        assert np.abs(rec.imag).max() < 1e-10
        assert np.abs(rec.real - tr.dI).max() < 1e-8
        assert rec[0].real == pytest.approx(1 - tr.I_inf, abs=1e-8)


def test_conjugate_pairs():
    rep = report(8, build_staircase(8, "pbc"))
    lam, d = rep.lam, rep.d
    for k in np.flatnonzero(np.abs(lam.imag) > 1e-8):
        j = np.argmin(np.abs(lam - lam[k].conjugate()))
        assert abs(d[j] - d[k].conjugate()) < 1e-8


def test_s_pbc_cluster_sizes():
    n = 12
    a = np.sort(np.abs(np.linalg.eigvals(even_sector_matrix(n, build_staircase(n, "pbc"), XY))))[::-1]
    cuts = np.flatnonzero(-np.diff(a) > 0.02) + 1
    assert cuts[0] == 1
    assert cuts[1] - cuts[0] == n - 1
    assert cuts[2] - cuts[1] == (n - 1) * (n - 4) // 2


def test_s_obc_phantom_structure():
    n = 10
    rep = report(n, build_staircase(n))
    lam = np.abs(rep.lam)
    ring = (lam >= 0.24) & (lam <= 0.26)
    assert ring.sum() == n - 1
    assert (ring & (np.abs(rep.d) > 1e-10)).sum() == n // 2


def test_c_coefficients_grow_with_n():
    small = np.abs(report(8, build_staircase(8)).c).max()
    large = np.abs(report(12, build_staircase(12)).c).max()
    assert large > small


def test_phantom_single_mode_constant():
    rep = report(8, build_staircase(8))
    k = int(np.flatnonzero((np.abs(rep.lam.imag) < 1e-12) & ~rep.stationary
                           & (np.abs(rep.d) > 1e-8))[0])
    ph = phantom_sum(rep, [k], rep.lam[k].real, 6)
    assert np.allclose(ph.C, ph.C[0], rtol=1e-10)
    with pytest.raises(ValueError):
        phantom_sum(rep, [], 0.25, 3)


def test_phantom_complement_gives_tail():
    n = 10
    rep = report(n, build_staircase(n))
    sel = np.abs(np.abs(rep.lam) - 0.25) < 0.01
    rest = ~sel & ~rep.stationary
    t = np.arange(30)
    total = rep.reconstruct(t).real
    assert np.allclose(rep.reconstruct(t, sel).real + rep.reconstruct(t, rest).real, total,
                       atol=1e-12)


def test_power_diagonal():
    d = np.array([1.0, 0.5, 0.3])
    res = power_lambda2_op(lambda x: np.multiply(x, d, out=x), np.ones(3), np.array([1.0, 0, 0]),
                           tol=1e-10)
    assert res.converged and res.lam2 == pytest.approx(0.5, abs=1e-8)


def test_power_complex_pair():
    rng = np.random.default_rng(0)
    r, th = 0.25, np.pi / 3
    blk = r * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    core = np.zeros((5, 5))
    core[0, 0] = 1.0
    core[1:3, 1:3] = blk
    core[3, 3], core[4, 4] = 0.1, -0.05
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    basis = np.eye(5)
    basis[1:, 1:] = q
    m = basis @ core @ basis.T
    res = power_lambda2_op(lambda x: np.copyto(x, m @ x), rng.standard_normal(5), np.eye(5)[0],
                           window=6, tol=1e-10)
    assert res.lam2 == pytest.approx(0.25, abs=1e-8)


def test_power_s_obc_matches_exact():
    n = 10
    prot = build_staircase(n)
    exact = np.sort(np.abs(np.linalg.eigvals(even_sector_matrix(n, prot, XY))))[::-1][1]
    res = power_lambda2(n, prot, XY, max_iters=200000, tol=1e-9, windows=(24, 48, 96))
    assert res.converged
    assert abs(res.lam2 - exact) < 1e-6
    assert res.max_leak < 1e-10


def test_power_brickwall_quick():
    n = 10
    prot = build_brickwall(n, "pbc")
    exact = np.sort(np.abs(np.linalg.eigvals(even_sector_matrix(n, prot, XY))))[::-1][1]
    res = power_lambda2(n, prot, XY, max_iters=5000, tol=1e-9)
    assert abs(res.lam2 - exact) < 1e-6


def test_extrapolate_constant_and_errors():
    fit = extrapolate_tdl([(n, 0.3) for n in range(8, 16, 2)], degree=2)
    assert fit.value == pytest.approx(0.3, abs=1e-12)
    assert np.allclose(fit.coeffs[1:], 0, atol=1e-9)
    with pytest.raises(ValueError):
        extrapolate_tdl([(8, 0.1), (10, 0.1)], degree=2)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_ninth_eigenvector(n):
    nv = ninth_eigenvector(n)
    assert nv.residual <= 1e-10
    assert nv.residual_even <= 1e-10 and nv.residual_odd <= 1e-10
    assert odd_layer_residual(nv.v, n) < 1e-12


def test_odd_layer_any_alpha():
    nv = ninth_eigenvector(6, alpha=0.7, tol=np.inf)
    assert odd_layer_residual(nv.v, 6) < 1e-12
    assert nv.residual > 1e-6


def test_toy_exceptional():
    t = toy_exceptional(0.1)
    assert t.coeffs == pytest.approx([9, 10])
    assert toy_exceptional(0.5, a=1).coeffs == pytest.approx([2, 2])
    assert toy_exceptional(0.0).defective
    with pytest.raises(ValueError):
        toy_exceptional(1.5)


def test_even_indices_and_vectors():
    n = 6
    ev = even_indices(n)
    assert len(ev) == 2 ** (n - 1)
    assert np.array_equal(even_half(n), half_vector("111000")[ev])
    assert np.array_equal(even_phi0(n), initial_vector(n).data[ev])
    assert np.allclose(steady_raw(n)[ev] != 0, True)


def test_count_in_annulus():
    assert count_in_annulus(np.array([0.25, -0.25, 0.25j, 0.3]), 0.24, 0.26) == 3
