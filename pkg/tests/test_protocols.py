import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from purity_circuits.gates import XY, GateParams
from purity_circuits.protocols import (Protocol, apply_move, build_brickwall, build_staircase,
                                       canonical_pbc, canonicalize_obc, classify_pbc,
                                       default_sycamore, expand_layer_protocol, parse_geometry,
                                       parse_order, random_permutation, replay)
from purity_circuits.purity import period_matrix


def spectrum(prot, g=XY):
    return np.sort_complex(np.round(np.linalg.eigvals(period_matrix(prot.n, prot, g)), 9))


def same_spectrum(a, b, g=XY, tol=1e-9):
    ea = np.linalg.eigvals(period_matrix(a.n, a, g))
    eb = np.linalg.eigvals(period_matrix(b.n, b, g))
    # greedy matching is robust to ordering of near-equal complex values
    eb = list(eb)
    worst = 0.0
    for z in ea:
        k = int(np.argmin(np.abs(np.array(eb) - z)))
        worst = max(worst, abs(eb.pop(k) - z))
    return worst <= tol


def test_builders():
    assert build_staircase(4, "obc").bonds == ((1, 2), (2, 3), (3, 4))
    assert build_staircase(4, "pbc").bonds == ((1, 2), (2, 3), (3, 4), (4, 1))
    assert build_staircase(3).bonds == ((1, 2), (2, 3))
    assert build_brickwall(4, "pbc").bonds == ((1, 2), (3, 4), (2, 3), (4, 1))
    assert build_brickwall(5, "obc").bonds == ((1, 2), (3, 4), (2, 3), (4, 5))
    assert build_brickwall(6, "obc").bonds == ((1, 2), (3, 4), (5, 6), (2, 3), (4, 5))
    assert build_staircase(5, "pbc").T == 5 and build_staircase(5).T == 4
    with pytest.raises(ValueError):
        build_staircase(2)


def test_parse_order_roundtrip():
    p = Protocol(4, "obc", tuple(parse_order("2,3;1,2;3,4")))
    assert p.bonds == ((2, 3), (1, 2), (3, 4))
    assert parse_order(p.order_string()) == list(p.bonds)


def test_obc_figure_example():
    p = Protocol(6, "obc", ((2, 3), (1, 2), (3, 4), (5, 6), (4, 5)))
    canon, moves = canonicalize_obc(p)
    assert canon.bonds == build_staircase(6).bonds
    assert replay(list(p.bonds), moves) == list(canon.bonds)


def test_obc_fixed_point_and_reversed():
    s = build_staircase(7)
    canon, moves = canonicalize_obc(s)
    assert canon == s and moves == []
    rev = Protocol(7, "obc", tuple(reversed(s.bonds)))
    canon, _ = canonicalize_obc(rev)
    assert canon == s
    assert same_spectrum(rev, s)


def test_invalid_obc_rejected():
    with pytest.raises(ValueError):
        canonicalize_obc(Protocol(4, "obc", ((1, 2), (1, 2), (3, 4))))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_every_move_preserves_spectrum(seed):
    rng = np.random.default_rng(seed)
    prot = random_permutation(6, "pbc", rng)
    cls = classify_pbc(prot)
    bonds = list(prot.bonds)
    ref = spectrum(prot)
    for mv in cls.transcript[:6]:
        bonds = apply_move(bonds, mv)
        assert same_spectrum(Protocol(6, "pbc", tuple(bonds)), prot)
    assert replay(list(prot.bonds), cls.transcript) == list(cls.canonical.bonds)
    assert len(ref) == 64


def test_pbc_known_classes():
    for n in range(4, 10):
        assert classify_pbc(build_brickwall(n, "pbc")).p == n // 2
        assert classify_pbc(build_staircase(n, "pbc")).p == 1


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
def test_classify_idempotent(n):
    for p in range(1, n // 2 + 1):
        c = canonical_pbc(n, p)
        cls = classify_pbc(c)
        assert cls.p == p and cls.canonical == c


def test_intra_layer_order_is_irrelevant():
    geom = default_sycamore(3)
    a = expand_layer_protocol(geom, "ABCD")
    layers = geom.layers()
    shuffled = []
    for lab in "ABCD":
        shuffled += list(reversed(layers[lab]))
    b = Protocol(9, "2d", tuple(shuffled))
    # identical up to floating-point summation order
    assert np.abs(period_matrix(9, a, XY) - period_matrix(9, b, XY)).max() <= 1e-15


def test_sycamore_geometry_counts():
    for m in (3, 6, 9):
        geom = default_sycamore(m)
        n = geom.n
        assert n == 3 * m
        assert expand_layer_protocol(geom, "ABCDCDAB").T == (10 * n - 30) // 3
        assert expand_layer_protocol(geom, "ABCD").T == (5 * n - 15) // 3
        assert abs(geom.mask.count("1") - n / 2) <= 1
    assert default_sycamore(9).mask == "1" * 13 + "0" * 14
    assert expand_layer_protocol(default_sycamore(3), "").T == 0


def test_sycamore_small_grid_warns(caplog):
    with caplog.at_level(logging.WARNING):
        geom = default_sycamore(2)
    assert geom.n == 6
    assert any("empty" in r.message for r in caplog.records)
    assert expand_layer_protocol(geom, "ABCD").T == 5
    with pytest.raises(ValueError):
        default_sycamore(1)


def test_geometry_text_roundtrip_and_errors():
    geom = default_sycamore(4)
    back = parse_geometry(geom.to_text())
    assert back.layers() == geom.layers() and back.mask == geom.mask
    with pytest.raises(ValueError, match="overlapping"):
        parse_geometry("n 3\nbond 1 2 A\nbond 2 3 A\n")
    with pytest.raises(ValueError, match="not defined"):
        expand_layer_protocol(parse_geometry("n 3\nbond 1 2 A\n"), "AB")
    with pytest.raises(ValueError):
        parse_geometry("bond 1 2 A\n")
