import itertools
import warnings

import numpy as np
import pytest

from purity_circuits.gates import XY, GateParams, build_two_site
from purity_circuits.mps import (SWAP_PRIMED, TruncationPolicy, left_orthogonalize, mps_apply_gate,
                                 mps_initial, mps_purity_series, schmidt_pair, steady_mps,
                                 steady_mps_diagonal, x_norm)
from purity_circuits.protocols import build_brickwall, build_staircase
from purity_circuits.purity import i_inf_mask, purity_series, steady_vector


def masks(n):
    return ["".join(b) for b in itertools.product("01", repeat=n)]


def test_steady_mps_small():
    st = steady_mps(4)
    assert st.max_bond == 2
    assert st.purity("0000") == pytest.approx(1.0, abs=1e-15)
    assert st.purity("1100") == pytest.approx(8 / 17, abs=1e-15)


def test_steady_mps_all_strings_n10():
    st = steady_mps(10)
    diag = steady_mps_diagonal(10)
    for mask in masks(10):
        assert st.purity(mask) == pytest.approx(i_inf_mask(mask), abs=1e-10)
        assert diag.purity(mask) == pytest.approx(i_inf_mask(mask), abs=1e-12)


@pytest.mark.parametrize("n", [3, 6, 9, 12])
def test_steady_mps_equals_dense(n):
    assert np.abs(steady_mps(n).to_dense() - steady_vector(n, "primed").data).max() < 1e-10


def test_schmidt_norms():
    for p in range(1, 8):
        for s in (1, -1):
            assert x_norm(p, s) ** 2 == pytest.approx(2 * (5 ** p + s * 4 ** p) / (2 ** p + s) ** 2)
    sp = schmidt_pair(8, 3)
    assert min(sp.mu_plus, sp.mu_minus, sp.nu_plus, sp.nu_minus) >= 0


def test_initial_state():
    st = mps_initial(3)
    assert [t.shape for t in st.tensors] == [(1, 2, 1)] * 3
    assert all(st.purity(m) == 1.0 for m in masks(3))
    lo = left_orthogonalize(steady_mps(6))
    for m in masks(6):
        assert lo.purity(m) == pytest.approx(steady_mps(6).purity(m), abs=1e-14)


def test_steady_fixed_point_any_bond():
    n = 8
    m = build_two_site(GateParams(0.8, 0.4, 0.1), "primed").matrix
    st = steady_mps(n)
    ref = st.to_dense()
    for b in [(1, 2), (4, 5), (8, 1), (2, 6), (6, 2)]:
        mps_apply_gate(st, m, b)
    assert np.abs(st.to_dense() - ref).max() < 1e-12


def test_bond_growth_after_one_layer():
    n = 8
    st = mps_initial(n)
    m = build_two_site(XY, "primed").matrix
    for b in [(1, 2), (3, 4), (5, 6), (7, 8)]:
        mps_apply_gate(st, m, b)
    assert st.max_bond <= 4


def test_swap_primed_permutes_labels():
    assert np.array_equal(SWAP_PRIMED @ SWAP_PRIMED, np.eye(4))


@pytest.mark.parametrize("prot", [build_staircase(10), build_brickwall(10, "pbc")])
def test_mps_matches_dense(prot):
    n = 10
    d = purity_series(n, prot, XY, None, 8)
    m = mps_purity_series(n, prot, XY, None, 8, TruncationPolicy(chi=64))
    assert np.abs(d.I - m.I).max() < 1e-10
    assert "chi_max" in m.extra and "discarded_weight" in m.extra


def test_truncation_flags_and_monotone():
    n = 12
    prot = build_brickwall(n, "pbc")
    d = purity_series(n, prot, XY, None, 6)
    errs = []
    for cut in (1e-3, 1e-6, 1e-10):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = mps_purity_series(n, prot, XY, None, 6, TruncationPolicy(chi=64, sigma_min=cut))
        errs.append(np.abs(m.I - d.I).max())
    assert errs[0] >= errs[1] >= errs[2]
    with pytest.warns(UserWarning, match="discarded"):
        m = mps_purity_series(n, prot, XY, None, 6, TruncationPolicy(chi=2))
    assert m.meta["flagged"]


def test_mask_complement_mps():
    n = 10
    st = mps_initial(n)
    m = build_two_site(XY, "primed").matrix
    for _ in range(3):
        for b in build_staircase(n, "pbc").bonds:
            mps_apply_gate(st, m, b)
    assert st.purity("1101000110") == pytest.approx(st.purity("0010111001"), abs=1e-13)


def test_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(chi=0)
    with pytest.raises(ValueError):
        TruncationPolicy(gauge="weird")
    with pytest.raises(ValueError):
        mps_apply_gate(mps_initial(4), np.eye(4), (2, 2))


def test_sqrt_gauge_agrees_when_untruncated():
    n = 8
    prot = build_staircase(n, "pbc")
    a = mps_purity_series(n, prot, XY, None, 5, TruncationPolicy(gauge="sqrt"))
    b = mps_purity_series(n, prot, XY, None, 5, TruncationPolicy())
    assert np.abs(a.I - b.I).max() < 1e-10
