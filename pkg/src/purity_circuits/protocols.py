"""Gate-application protocols and their spectral-equivalence rewrites.

A protocol is an ordered list of bonds, first-applied first.  The one-period
transfer matrix is the product M_T ... M_2 M_1 of the bond matrices in that
order.  Three moves leave its spectrum unchanged:

* ``rotate k``: the first k applied gates are moved to the end (cyclic
  permutation of the product),
* ``swap i``: positions i and i+1 are exchanged, allowed only when the two
  bonds share no site (the factors commute),
* ``transpose``: the list is reversed, i.e. the product is transposed, which
  keeps the spectrum when every factor is a symmetric matrix.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

log = logging.getLogger(__name__)

Bond = tuple[int, int]
Move = tuple[str, int | None]


@dataclass(frozen=True)
class Protocol:
    n: int
    boundary: str  # "obc", "pbc" or "2d"
    bonds: tuple[Bond, ...]

    def __post_init__(self):
        object.__setattr__(self, "bonds", tuple((int(i), int(j)) for i, j in self.bonds))
        for i, j in self.bonds:
            if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"bad bond {(i, j)} for n={self.n}")

    @property
    def T(self) -> int:
        return len(self.bonds)

    def order_string(self) -> str:
        return ";".join(f"{i},{j}" for i, j in self.bonds)


def parse_order(text: str) -> list[Bond]:
    """Parse ``"2,3;1,2;3,4"`` into a bond list."""
    bonds = []
    for chunk in text.replace(" ", "").split(";"):
        if not chunk:
            continue
        i, j = chunk.split(",")
        bonds.append((int(i), int(j)))
    return bonds


def _chain_bonds(n: int, boundary: str) -> list[Bond]:
    bonds = [(i, i + 1) for i in range(1, n)]
    if boundary == "pbc":
        bonds.append((n, 1))
    return bonds


def _check_n(n: int):
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")


def _check_boundary(boundary: str):
    if boundary not in ("obc", "pbc"):
        raise ValueError(f"boundary must be 'obc' or 'pbc', got {boundary!r}")


def build_staircase(n: int, boundary: str = "obc") -> Protocol:
    _check_n(n)
    _check_boundary(boundary)
    return Protocol(n, boundary, tuple(_chain_bonds(n, boundary)))


def build_brickwall(n: int, boundary: str = "obc") -> Protocol:
    """Odd bonds (1,2),(3,4),... first, then the even layer.

    For PBC with even n the wrap bond (n,1) closes the even layer.  For odd n
    the wrap bond cannot join either layer and is applied last.
    """
    _check_n(n)
    _check_boundary(boundary)
    odd = [(i, i + 1) for i in range(1, n, 2)]
    even = [(i, i + 1) for i in range(2, n, 2)]
    bonds = odd + even
    if boundary == "pbc":
        bonds.append((n, 1))
    return Protocol(n, boundary, tuple(bonds))


def canonical_pbc(n: int, p: int) -> Protocol:
    """Canonical representative of PBC class p: a (2p-1)-gate brick wall on
    sites 1..2p followed by the staircase (2p,2p+1),...,(n,1)."""
    _check_n(n)
    if not 1 <= p <= n // 2:
        raise ValueError(f"p must lie in [1, {n // 2}], got {p}")
    odd = [(i, i + 1) for i in range(1, 2 * p, 2)]
    even = [(i, i + 1) for i in range(2, 2 * p - 1, 2)]
    stair = [(k, k % n + 1) for k in range(2 * p, n + 1)]
    return Protocol(n, "pbc", tuple(odd + even + stair))


def bond_key(b: Bond, n: int) -> int:
    """Index k of a 1D bond (k, k+1), with (n, 1) -> n."""
    i, j = sorted(b)
    if j == i + 1:
        return i
    if (i, j) == (1, n):
        return n
    raise ValueError(f"{b} is not a nearest-neighbour bond")


def _validate_chain(prot: Protocol, boundary: str) -> list[int]:
    if prot.boundary != boundary:
        raise ValueError(f"expected a {boundary} protocol, got {prot.boundary}")
    keys = [bond_key(b, prot.n) for b in prot.bonds]
    want = list(range(1, prot.n if boundary == "obc" else prot.n + 1))
    if sorted(keys) != want:
        raise ValueError(f"bonds are not a permutation of the {boundary} chain bonds")
    return keys


def commute(a: Bond, b: Bond) -> bool:
    return not (set(a) & set(b))


def apply_move(bonds: list[Bond], move: Move) -> list[Bond]:
    kind, pos = move
    if kind == "rotate":
        k = pos % len(bonds)
        return bonds[k:] + bonds[:k]
    if kind == "swap":
        a, b = bonds[pos], bonds[pos + 1]
        if not commute(a, b):
            raise ValueError(f"cannot swap non-commuting bonds {a}, {b}")
        out = list(bonds)
        out[pos], out[pos + 1] = b, a
        return out
    if kind == "transpose":
        return bonds[::-1]
    raise ValueError(f"unknown move {kind!r}")


def replay(bonds, transcript) -> list[Bond]:
    out = list(bonds)
    for m in transcript:
        out = apply_move(out, m)
    return out


class _Rewriter:
    """Bond list plus the transcript of moves applied to it."""

    def __init__(self, bonds):
        self.bonds = list(bonds)
        self.moves: list[Move] = []

    def do(self, kind, pos=None):
        self.bonds = apply_move(self.bonds, (kind, pos))
        self.moves.append((kind, pos))

    def bubble(self, src: int, dst: int):
        """Carry the gate at ``src`` to ``dst`` by commuting swaps."""
        while src > dst:
            self.do("swap", src - 1)
            src -= 1
        while src < dst:
            self.do("swap", src)
            src += 1

    def sort_to(self, target):
        """Reach ``target`` with swaps only (same precedence structure required)."""
        for pos, b in enumerate(target):
            self.bubble(self.bonds.index(b), pos)


def canonicalize_obc(prot: Protocol) -> tuple[Protocol, list[Move]]:
    """Rewrite any OBC ordering into the staircase (1,2),(2,3),...,(n-1,n).

    Greedy growth of a staircase prefix: with (1,2),...,(i-1,i) in front, the
    gates standing between the prefix and (i,i+1) act away from sites 1..i, so
    they commute past the prefix and are then rotated to the back.
    """
    _validate_chain(prot, "obc")
    n = prot.n
    rw = _Rewriter(prot.bonds)
    keys = lambda: [bond_key(b, n) for b in rw.bonds]  # noqa: E731
    first = keys().index(1)
    if first:
        rw.do("rotate", first)
    for i in range(2, n):
        j = keys().index(i)
        between = j - (i - 1)
        if between == 0:
            continue
        # carry the in-between gates in front of the prefix, one by one
        for k in range(between):
            rw.bubble(i - 1 + k, k)
        rw.do("rotate", between)
    return Protocol(n, "obc", tuple(rw.bonds)), rw.moves


def pbc_orientation(prot: Protocol) -> list[int]:
    """For k = 1..n, +1 when bond k is applied before bond k+1 (cyclically)."""
    n = prot.n
    pos = {bond_key(b, n): t for t, b in enumerate(prot.bonds)}
    return [1 if pos[k] < pos[k % n + 1] else -1 for k in range(1, n + 1)]


@dataclass(frozen=True)
class EquivalenceClass:
    p: int
    canonical: Protocol
    transcript: list = field(default_factory=list, compare=False)


def _particle_plan(cur: list[int], tgt: list[int]) -> list[tuple[int, int]]:
    """Hops turning occupation ``cur`` into ``tgt`` on a ring.

    A hop (x, +1) moves the particle at edge x to x+1.  Particles keep their
    cyclic order, so no hop is ever blocked for good.
    """
    n = len(cur)
    p = [i for i in range(n) if cur[i]]
    t = [i for i in range(n) if tgt[i]]
    F = len(p)
    best = None
    for s in range(F):
        lift = [t[(j + s) % F] + n * ((j + s) // F) for j in range(F)]
        for c in (-2, -1, 0, 1):
            d = [lift[j] - p[j] + c * n for j in range(F)]
            cost = sum(abs(x) for x in d)
            if best is None or cost < best[0]:
                best = (cost, d)
    disp = best[1]
    occ = list(cur)
    posn = list(p)
    hops = []
    while any(disp):
        moved = False
        for j in range(F):
            if disp[j] == 0:
                continue
            step = 1 if disp[j] > 0 else -1
            nxt = (posn[j] + step) % n
            if occ[nxt]:
                continue
            hops.append((posn[j], step))
            occ[posn[j]], occ[nxt] = 0, 1
            posn[j] = nxt
            disp[j] -= step
            moved = True
        if not moved:
            raise RuntimeError("particle plan deadlocked")
    return hops


def classify_pbc(prot: Protocol) -> EquivalenceClass:
    """Spectral class p of a 1D PBC ordering and a rewrite to its canonical form.

    The ordering is encoded by which of each pair of neighbouring bonds acts
    first.  With F the number of pairs where bond k precedes bond k+1, the
    class is p = min(F, n - F).  Rotating the first gate to the back turns a
    bond that precedes both neighbours into one that follows both, which moves
    one "precedes" mark by one slot; commuting swaps leave the marks alone and
    transposition complements them.  The rewrite transposes if needed, moves
    the marks onto those of the canonical form, then sorts with swaps.
    """
    keys = _validate_chain(prot, "pbc")  # noqa: F841
    n = prot.n
    rw = _Rewriter(prot.bonds)
    orient = pbc_orientation(prot)
    F = sum(o > 0 for o in orient)
    if F < n - F:
        rw.do("transpose")
        F = n - F
    p = n - F
    canon = canonical_pbc(n, p)
    cur = [int(o > 0) for o in pbc_orientation(Protocol(n, "pbc", tuple(rw.bonds)))]
    tgt = [int(o > 0) for o in pbc_orientation(canon)]
    # edge index e (0-based) sits between bonds e+1 and e+2; a hop from e to
    # e-1 flips bond e+1 from "before both" to "after both" and vice versa
    for e, step in _particle_plan(cur, tgt):
        if step == -1:
            bond = e + 1  # bond between edges e-1 and e, currently a source
            pos = [bond_key(b, n) for b in rw.bonds].index(bond)
            rw.bubble(pos, 0)
            rw.do("rotate", 1)
        else:
            bond = (e + 1) % n + 1  # between edges e and e+1, currently a sink
            pos = [bond_key(b, n) for b in rw.bonds].index(bond)
            rw.bubble(pos, n - 1)
            rw.do("rotate", -1)
    rw.sort_to(list(canon.bonds))
    out = Protocol(n, "pbc", tuple(rw.bonds))
    if out.bonds != canon.bonds:
        raise RuntimeError("PBC rewrite did not reach the canonical form")
    return EquivalenceClass(p, canon, rw.moves)


def random_permutation(n: int, boundary: str, rng) -> Protocol:
    bonds = _chain_bonds(n, boundary)
    order = rng.permutation(len(bonds))
    return Protocol(n, boundary, tuple(bonds[k] for k in order))


# --- 2D layered geometries -------------------------------------------------

@dataclass
class Geometry:
    n: int
    bonds: list[tuple[Bond, str]]
    rows: int | None = None
    cols: int | None = None
    mask: str | None = None  # default bipartition, '1' marks subsystem A
    notes: list[str] = field(default_factory=list)
    declared: tuple[str, ...] = ()  # layer letters that exist even with no bonds

    def layers(self) -> dict[str, list[Bond]]:
        out: dict[str, list[Bond]] = {lab: [] for lab in self.declared}
        for b, lab in self.bonds:
            out.setdefault(lab, []).append(b)
        return out

    def validate(self):
        for lab, group in self.layers().items():
            seen: set[int] = set()
            for b in group:
                if seen & set(b):
                    raise ValueError(f"layer {lab} has overlapping bonds at {b}")
                seen |= set(b)
        for (i, j), _ in self.bonds:
            if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"bad bond {(i, j)} for n={self.n}")

    def to_text(self) -> str:
        lines = []
        lines += [f"# {note}" for note in self.notes]
        lines.append(f"n {self.n}")
        if self.rows is not None:
            lines.append(f"grid {self.rows} {self.cols}")
        if self.mask is not None:
            lines.append(f"mask {self.mask}")
        lines += [f"layer {lab}" for lab in self.declared]
        lines += [f"bond {i} {j} {lab}" for (i, j), lab in self.bonds]
        return "\n".join(lines) + "\n"


def parse_geometry(text: str) -> Geometry:
    """Line format: ``n <count>``, ``bond <i> <j> <LETTER>``, optional
    ``grid <rows> <cols>``, ``mask <bits>`` and ``layer <LETTER>`` (declares a
    possibly empty layer); ``#`` starts a comment."""
    n = None
    bonds: list[tuple[Bond, str]] = []
    rows = cols = mask = None
    declared: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        try:
            if key == "n":
                n = int(parts[1])
            elif key == "bond":
                i, j, lab = int(parts[1]), int(parts[2]), parts[3]
                if not re.fullmatch(r"[A-Za-z]", lab):
                    raise ValueError(f"layer label must be one letter, got {lab!r}")
                bonds.append(((i, j), lab.upper()))
            elif key == "grid":
                rows, cols = int(parts[1]), int(parts[2])
            elif key == "mask":
                mask = parts[1]
            elif key == "layer":
                if not re.fullmatch(r"[A-Za-z]", parts[1]):
                    raise ValueError(f"layer label must be one letter, got {parts[1]!r}")
                declared.append(parts[1].upper())
            else:
                raise ValueError(f"unknown directive {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"geometry line {lineno}: {exc}") from None
    if n is None:
        raise ValueError("geometry is missing the 'n <count>' header")
    geom = Geometry(n, bonds, rows, cols, mask, declared=tuple(declared))
    if mask is not None and len(mask) != n:
        raise ValueError(f"mask has {len(mask)} bits, expected {n}")
    geom.validate()
    return geom


def expand_layer_protocol(geom: Geometry, word: str) -> Protocol:
    layers = geom.layers()
    bonds: list[Bond] = []
    for letter in word.upper():
        if letter not in layers:
            raise ValueError(f"layer {letter!r} is not defined in the geometry")
        bonds += layers[letter]
    return Protocol(geom.n, "2d", tuple(bonds))


def default_sycamore(m: int) -> Geometry:
    """3-column, m-row patch of the Sycamore coupler lattice.

    Rows are stacked bottom (row 0) to top; odd rows are offset by half a
    lattice spacing to the right, so neighbouring rows are joined by a zigzag of
    five diagonal couplers.  Layers: A = up-right couplers leaving odd rows,
    B = up-right leaving even rows, C = up-left leaving even rows, D = up-left
    leaving odd rows.  Qubit (row r, col c) has index 3 r + c + 1.

    The letter assignment was fixed by scanning all 48 labelings at m=3 against
    reference effective eigenvalues; see ``data/sycamore_m3.txt``.
    """
    if m < 2:
        raise ValueError(f"need m >= 2, got {m}")
    return sycamore_geometry(m, SYCAMORE_LABELS)


SYCAMORE_LABELS = {"ur_even": "B", "ur_odd": "A", "ul_even": "C", "ul_odd": "D"}


def sycamore_geometry(m: int, labels: dict[str, str], offset_odd: int = 1) -> Geometry:
    """3 x m zigzag lattice with the four coupler classes mapped to letters.

    ``offset_odd=+1`` shifts odd rows right by half a spacing, ``-1`` left.
    """
    q = lambda r, c: 3 * r + c + 1  # noqa: E731
    bonds = []
    for r in range(m - 1):
        par = "even" if r % 2 == 0 else "odd"
        shifted = (r % 2 == 1)
        # x-position of (r, c) is c + 0.5*offset when the row is shifted
        for c in range(3):
            for c2 in range(3):
                x1 = c + (0.5 * offset_odd if shifted else 0.0)
                x2 = c2 + (0.5 * offset_odd if not shifted else 0.0)
                dx = x2 - x1
                if abs(abs(dx) - 0.5) > 1e-9:
                    continue
                kind = "ur" if dx > 0 else "ul"
                bonds.append(((q(r, c), q(r + 1, c2)), labels[f"{kind}_{par}"]))
    geom = Geometry(3 * m, bonds, rows=m, cols=3, mask=sycamore_mask(m), declared=tuple("ABCD"))
    geom.notes.append(f"3x{m} Sycamore-style patch, row 0 at the bottom, qubit = 3*row + col + 1")
    for lab, group in geom.layers().items():
        if not group:
            msg = f"layer {lab} is empty for m={m}"
            log.warning(msg)
            geom.notes.append("warning: " + msg)
    geom.validate()
    return geom


def sycamore_mask(m: int) -> str:
    """Bottom m/2 rows in A; for odd m the bottom (m-1)/2 rows plus the
    leftmost qubit of the next row."""
    n = 3 * m
    bits = ["0"] * n
    full_rows = m // 2
    for k in range(3 * full_rows):
        bits[k] = "1"
    if m % 2:
        bits[3 * full_rows] = "1"
    return "".join(bits)


def all_layer_words(letters: str = "ABCD", length: int = 8):
    """Words using each letter twice (8-letter protocols); helper for scans."""
    seen = set()
    for w in permutations(letters * (length // len(letters))):
        if w not in seen:
            seen.add(w)
            yield "".join(w)


def protocol_from_spec(n: int, boundary: str, config: str) -> Protocol:
    """``config`` is 's', 'bw' or an explicit order string."""
    if config == "s":
        return build_staircase(n, boundary)
    if config == "bw":
        return build_brickwall(n, boundary)
    return Protocol(n, boundary, tuple(parse_order(config)))


def bond_count_check(geom: Geometry, word: str) -> int:
    return expand_layer_protocol(geom, word).T


def as_array(prot: Protocol) -> np.ndarray:
    return np.array(prot.bonds, dtype=np.int64)
