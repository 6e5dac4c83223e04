import numpy as np
import pytest

from purity_circuits.gates import CNOT, HAAR_U4, RANDOM_A, SWAP, SYCAMORE, XY, build_two_site, xxz
from purity_circuits.mean_field import all_to_all_rate, gap_formula, mbar_matrix, mean_field_gap
from purity_circuits.purity import DenseCapError, steady_vector


def test_n2_is_single_gate():
    assert np.allclose(mbar_matrix(2, XY), build_two_site(XY).matrix, atol=1e-15)


def test_steady_and_parity():
    for n in (4, 7):
        mb = mbar_matrix(n, SYCAMORE)
        s = steady_vector(n).data
        assert np.abs(mb @ s - s).max() < 1e-14
        w = np.array([bin(k).count("1") % 2 for k in range(2 ** n)])
        assert np.abs(mb[np.ix_(w == 0, w == 1)]).max() == 0
        assert np.abs(np.linalg.eigvals(mb)).max() <= 1 + 1e-12


def test_formula_values():
    assert gap_formula(9, XY) == pytest.approx(4 / 27)
    assert gap_formula(9, CNOT) == pytest.approx(4 / 27)
    assert gap_formula(9, SWAP) == pytest.approx(0, abs=1e-15)
    assert all_to_all_rate(XY) == pytest.approx(4 / 3, abs=1e-15)
    assert all_to_all_rate(HAAR_U4) == pytest.approx(6 / 5, abs=1e-15)
    assert all_to_all_rate(SWAP) == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("g", [XY, CNOT, SYCAMORE, RANDOM_A, HAAR_U4, xxz(0.5)])
def test_gap_within_quarter_at_n12(g):
    mf = mean_field_gap(12, g)
    assert 0 <= mf.numeric <= 1
    assert abs(mf.residual) <= 0.25 * mf.formula
    assert abs(mean_field_gap(10, g).residual) > abs(mf.residual)


def test_cap():
    with pytest.raises(DenseCapError):
        mbar_matrix(15, XY)
