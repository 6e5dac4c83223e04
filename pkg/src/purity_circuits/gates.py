"""Averaged two-qubit transfer matrices for canonical gates.

Basis ordering is (uu, ud, du, dd) with "up" stored as bit 0 and the first
qubit as the most significant bit.  "up" marks a qubit that belongs to the
subsystem A of a bipartition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.stats import unitary_group

SQ3 = np.sqrt(3.0)

# single-site similarity transform between the primed (purity) basis and the
# rotated (symmetric) basis
A_SITE = np.array([[1.0, -1.0 / SQ3], [1.0, 1.0 / SQ3]])
A_SITE_INV = np.linalg.inv(A_SITE)
A_PAIR = np.kron(A_SITE, A_SITE)
A_PAIR_INV = np.kron(A_SITE_INV, A_SITE_INV)

_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y = np.array([[0.0, -1j], [1j, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])

BASES = ("primed", "rotated")


@dataclass(frozen=True)
class GateParams:
    """Canonical parameters (a_x, a_y, a_z) of a 2-qubit gate.

    ``haar_u4=True`` marks the Haar-random U(4) pseudo-gate; the angles are then
    ignored and the effective coefficients are u=0, v=-3/5.
    """

    a_x: float = 0.0
    a_y: float = 0.0
    a_z: float = 0.0
    haar_u4: bool = False

    @classmethod
    def canonical(cls, a_x: float, a_y: float, a_z: float) -> "GateParams":
        if not (0.0 <= a_z <= a_y <= a_x <= 1.0):
            raise ValueError(
                f"canonical parameters need 0 <= a_z <= a_y <= a_x <= 1, got {(a_x, a_y, a_z)}"
            )
        return cls(float(a_x), float(a_y), float(a_z))

    @classmethod
    def unchecked(cls, a_x: float, a_y: float, a_z: float) -> "GateParams":
        return cls(float(a_x), float(a_y), float(a_z))

    @classmethod
    def haar(cls) -> "GateParams":
        return cls(haar_u4=True)

    @property
    def label(self) -> str:
        if self.haar_u4:
            return "haar-u4"
        return f"({self.a_x:g},{self.a_y:g},{self.a_z:g})"


XY = GateParams(1.0, 1.0, 0.0)
CNOT = GateParams(1.0, 0.0, 0.0)
SWAP = GateParams(1.0, 1.0, 1.0)
SYCAMORE = GateParams(1.0, 1.0, 1.0 / 6.0)
RANDOM_A = GateParams(0.8501, 0.4628, 0.1204)
HAAR_U4 = GateParams.haar()


def xxz(a_z: float) -> GateParams:
    return GateParams.canonical(1.0, 1.0, a_z)


@dataclass(frozen=True)
class GateCoefficients:
    u: float
    v: float
    h: float
    b_plus: float
    b_minus: float
    d: float
    J_x: float
    J_y: float
    J_z: float

    @property
    def entangling_power(self) -> float:
        return self.h / 2.0

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("u", "v", "h", "b_plus", "b_minus", "d", "J_x", "J_y", "J_z")}
        out["entangling_power"] = self.entangling_power
        return out


@dataclass(frozen=True)
class TwoSiteMatrix:
    matrix: np.ndarray
    basis: str

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")


def _uv(g: GateParams) -> tuple[float, float]:
    if g.haar_u4:
        return 0.0, -0.6
    cx, cy, cz = np.cos(np.pi * np.array([g.a_x, g.a_y, g.a_z]))
    return float(cx + cy + cz), float(cx * cy + cx * cz + cy * cz)


def canonical_coeffs(g: GateParams) -> GateCoefficients:
    u, v = _uv(g)
    return GateCoefficients(
        u=u,
        v=v,
        h=(3 - v) / 9,
        b_plus=(3 + 6 * u + 5 * v) / 36,
        b_minus=(3 - 6 * u + 5 * v) / 36,
        d=(39 + 6 * u + 5 * v) / 72,
        J_x=(9 - 2 * u - v) / 24,
        J_y=(3 - 2 * u + v) / 24,
        J_z=(3 - 6 * u + 5 * v) / 72,
    )


def primed_from_coeffs(c: GateCoefficients) -> np.ndarray:
    h, bp, bm = c.h, c.b_plus, c.b_minus
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [h, bp, bm, h],
        [h, bm, bp, h],
        [0.0, 0.0, 0.0, 1.0],
    ])


def rotated_from_coeffs(c: GateCoefficients) -> np.ndarray:
    """Direct entry formula for the symmetric two-site matrix."""
    v = c.v
    up, um = (3 + c.u) / 6, (3 - c.u) / 6
    off = (3 - v) / 12
    return np.array([
        [(33 + v) / 36, 0.0, 0.0, off],
        [0.0, up, um, 0.0],
        [0.0, um, up, 0.0],
        [off, 0.0, 0.0, (1 + v) / 4],
    ])


def rotated_pauli_form(c: GateCoefficients) -> np.ndarray:
    """Same matrix assembled as d + J.sigma sigma + h/2 (Z_i + Z_j)."""
    m = (c.d * np.eye(4)
         + c.J_x * np.kron(_X, _X)
         + c.J_y * np.kron(_Y, _Y)
         + c.J_z * np.kron(_Z, _Z)
         + 0.5 * c.h * (np.kron(_Z, _I2) + np.kron(_I2, _Z)))
    return np.real_if_close(m).astype(float)


def to_rotated(primed: np.ndarray) -> np.ndarray:
    return A_PAIR_INV @ primed @ A_PAIR


def to_primed(rotated: np.ndarray) -> np.ndarray:
    return A_PAIR @ rotated @ A_PAIR_INV


def build_two_site(g: GateParams, basis: str = "rotated") -> TwoSiteMatrix:
    c = canonical_coeffs(g)
    if basis == "rotated":
        return TwoSiteMatrix(rotated_from_coeffs(c), "rotated")
    if basis == "primed":
        return TwoSiteMatrix(primed_from_coeffs(c), "primed")
    raise ValueError(f"unknown basis {basis!r}")


def gate_eigensystem(g: GateParams) -> list[tuple[np.ndarray, float]]:
    """Gate-independent eigenvectors of the rotated matrix and their eigenvalues."""
    c = canonical_coeffs(g)
    return [
        (np.array([3.0, 0.0, 0.0, 1.0]), 1.0),
        (np.array([0.0, 1.0, 1.0, 0.0]), 1.0),
        (np.array([0.0, -1.0, 1.0, 0.0]), c.u / 3),
        (np.array([-1.0, 0.0, 0.0, 3.0]), (3 + 5 * c.v) / 18),
    ]


def unitary(g: GateParams) -> np.ndarray:
    """The canonical unitary exp[i pi/4 (a_x XX + a_y YY + a_z ZZ)]."""
    if g.haar_u4:
        raise ValueError("the Haar-U(4) pseudo-gate has no fixed unitary")
    gen = (g.a_x * np.kron(_X, _X) + g.a_y * np.kron(_Y, _Y)
           + g.a_z * np.kron(_Z, _Z))
    return la.expm(0.25j * np.pi * gen)


def _bloch_state(r: float, axis: np.ndarray) -> np.ndarray:
    return 0.5 * (_I2 + r * axis)


# Bloch radii giving single-qubit purities 1/2, 2/3, 5/6, 1
_RADII = np.sqrt([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])


def _probe_inputs() -> list[tuple[np.ndarray, np.ndarray]]:
    """16 product densities whose purity vectors span R^4."""
    probes = []
    for r1 in _RADII:
        for r2 in _RADII:
            rho = np.kron(_bloch_state(r1, _Z), _bloch_state(r2, _X))
            p1, p2 = (1 + r1 ** 2) / 2, (1 + r2 ** 2) / 2
            probes.append((rho.astype(complex), np.array([p1 * p2, p1, p2, 1.0])))
    return probes


def _purities(rho: np.ndarray) -> np.ndarray:
    """Purity vector (uu, ud, du, dd) of a batch of 2-qubit densities."""
    t = rho.reshape(-1, 2, 2, 2, 2)
    r1 = np.einsum("nabcb->nac", t)
    r2 = np.einsum("nabad->nbd", t)
    full = np.einsum("nij,nji->n", rho, rho).real
    p1 = np.einsum("nij,nji->n", r1, r1).real
    p2 = np.einsum("nij,nji->n", r2, r2).real
    return np.stack([full, p1, p2, np.ones_like(full)], axis=1)


def mc_purity_map(g: GateParams, samples: int, seed: int | None = 0,
                  chunk: int = 20000) -> np.ndarray:
    """Empirical 4x4 purity map from sampled single-qubit Haar twirls.

    Each probe density is acted on by W (V_1 x V_2) with independent Haar V's;
    the averaged output purities are regressed on the input purities.
    """
    if g.haar_u4:
        raise ValueError("Monte-Carlo validation needs a fixed gate, not the Haar pseudo-gate")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    w = unitary(g)
    rng = np.random.default_rng(seed)
    probes = _probe_inputs()
    sums = np.zeros((len(probes), 4))
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        v1 = unitary_group.rvs(2, size=k, random_state=rng).reshape(k, 2, 2)
        v2 = unitary_group.rvs(2, size=k, random_state=rng).reshape(k, 2, 2)
        u = w[None] @ np.einsum("nab,ncd->nacbd", v1, v2).reshape(k, 4, 4)
        ud = np.conj(np.transpose(u, (0, 2, 1)))
        for i, (rho, _) in enumerate(probes):
            sums[i] += _purities(u @ rho[None] @ ud).sum(axis=0)
        done += k
    y = sums / samples
    x = np.array([p for _, p in probes])
    sol, *_ = np.linalg.lstsq(x, y, rcond=None)
    return sol.T


def mc_validate_gate(g: GateParams, samples: int, seed: int | None = 0,
                     rows: slice | list | None = None) -> float:
    """Max deviation between the Monte-Carlo purity map and the analytic primed matrix."""
    emp = mc_purity_map(g, samples, seed)
    diff = np.abs(emp - build_two_site(g, "primed").matrix)
    if rows is not None:
        diff = diff[rows]
    return float(diff.max())
