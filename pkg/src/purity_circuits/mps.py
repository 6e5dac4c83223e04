"""Tensor-train representation of purity vectors in the primed basis.

Site tensors have shape (left, 2, right); physical index 0 is "up" (qubit in
subsystem A).  Contracting the chain along a bit string gives the purity of
that bipartition directly.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gates import GateParams, build_two_site
from .protocols import Protocol
from .purity import NOISE_FLOOR, RateTrace, boundary_area, i_inf_mask, symmetric_mask

log = logging.getLogger(__name__)

# purity-space SWAP: exchanging two qubits permutes the (ud, du) labels
SWAP_PRIMED = np.array([[1.0, 0, 0, 0], [0, 0, 1.0, 0], [0, 1.0, 0, 0], [0, 0, 0, 1.0]])


@dataclass
class TruncationPolicy:
    chi: int = 256
    sigma_min: float = 1e-12  # relative to the largest singular value
    warn_weight: float = 1e-8
    gauge: str = "canonical"  # or "sqrt"

    def __post_init__(self):
        if self.chi < 1:
            raise ValueError("chi must be >= 1")
        if self.gauge not in ("canonical", "sqrt"):
            raise ValueError(f"unknown gauge {self.gauge!r}")


@dataclass
class MpsPurityState:
    tensors: list[np.ndarray]
    basis: str = "primed"
    discarded: list[float] = field(default_factory=list)
    flagged: bool = False
    center: int | None = None  # orthogonality centre, None if not canonical

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def max_bond(self) -> int:
        return max(t.shape[2] for t in self.tensors)

    def copy(self) -> "MpsPurityState":
        return MpsPurityState([t.copy() for t in self.tensors], self.basis,
                              list(self.discarded), self.flagged, self.center)

    def contract(self, bits) -> float:
        """Amplitude at the basis string ``bits`` (sequence of 0/1, 0 = up)."""
        v = np.ones(1)
        for t, b in zip(self.tensors, bits):
            v = v @ t[:, int(b), :]
        return float(v[0])

    def purity(self, mask: str) -> float:
        # mask bit 1 (in A) is physical "up" = 0
        return self.contract(1 - int(c) for c in mask)

    def to_dense(self) -> np.ndarray:
        v = self.tensors[0][0]  # (2, r)
        for t in self.tensors[1:]:
            v = np.einsum("ar,rbs->abs", v, t).reshape(-1, t.shape[2])
        return v[:, 0]


# --- steady state ------------------------------------------------------------

def x_norm(p: int, sign: int) -> float:
    """|x^(p)_{+/-}| = sqrt(2 (5^p +/- 4^p)) / (2^p +/- 1)."""
    return np.sqrt(2.0 * (5.0 ** p + sign * 4.0 ** p)) / (2.0 ** p + sign)


def mu(n: int, r: int, sign: int) -> float:
    return np.sqrt((5.0 ** r + sign * 4.0 ** r) * (5.0 ** n * 4.0 ** r + sign * 5.0 ** r * 4.0 ** n)
                   / 5.0 ** r) / (2.0 ** r * (2.0 ** n + 1))


def nu(n: int, r: int, sign: int) -> float:
    return np.sqrt((5.0 ** r + sign * 4.0 ** r) * (5.0 ** n * 4.0 ** r - sign * 5.0 ** r * 4.0 ** n)
                   / 5.0 ** r) / (2.0 ** r * (2.0 ** n - 1))


@dataclass(frozen=True)
class SchmidtPair:
    mu_plus: float
    mu_minus: float
    nu_plus: float
    nu_minus: float
    norm_plus: float
    norm_minus: float


def schmidt_pair(n: int, r: int) -> SchmidtPair:
    return SchmidtPair(mu(n, r, 1), mu(n, r, -1), nu(n, r, 1), nu(n, r, -1),
                       x_norm(n, 1), x_norm(n, -1))


def steady_mps(n: int) -> MpsPurityState:
    """Bond-dimension-2 chain for I_s = (2^{n_A} + 2^{n_B}) / (1 + 2^n).

    Built from the two-vector Schmidt recursion; the matrices at site r use the
    length k = n - r + 1 of the chain that starts at r.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    h = 1.0 / np.sqrt(2.0)
    tensors = []
    for r in range(1, n):
        k = n - r + 1
        a = h * np.array([[mu(k, 1, 1) / x_norm(k, 1), -mu(k, 1, -1) / x_norm(k, 1)],
                          [-nu(k, 1, -1) / x_norm(k, -1), nu(k, 1, 1) / x_norm(k, -1)]])
        b = h * np.array([[mu(k, 1, 1) / x_norm(k, 1), mu(k, 1, -1) / x_norm(k, 1)],
                          [nu(k, 1, -1) / x_norm(k, -1), nu(k, 1, 1) / x_norm(k, -1)]])
        if r == 1:
            # the full chain x^(n)_+ is normalised to I = 1 on the empty cut
            a, b = a * x_norm(n, 1), b * x_norm(n, 1)
            tensors.append(np.stack([a[:1], b[:1]], axis=1))  # (1, 2, 2)
        else:
            tensors.append(np.stack([a, b], axis=1))
    last = h * np.array([[1.0, -1.0], [1.0, 1.0]])  # rows: up, down; cols: bond
    tensors.append(last.T.reshape(2, 2, 1))
    return MpsPurityState(tensors)


def steady_mps_diagonal(n: int) -> MpsPurityState:
    """Independent rank-2 form: [(2,1)^{x n} + (1,2)^{x n}] / (1 + 2^n)."""
    site = np.zeros((2, 2, 2))
    site[0, :, 0] = (2.0, 1.0)
    site[1, :, 1] = (1.0, 2.0)
    first = np.zeros((1, 2, 2))
    first[0, :, 0] = (2.0, 1.0)
    first[0, :, 1] = (1.0, 2.0)
    last = np.zeros((2, 2, 1))
    last[0, :, 0] = (2.0, 1.0)
    last[1, :, 0] = (1.0, 2.0)
    tensors = [first] + [site.copy() for _ in range(n - 2)] + [last]
    tensors[0] = tensors[0] / (1.0 + 2.0 ** n)
    return MpsPurityState(tensors)


def mps_initial(n: int) -> MpsPurityState:
    if n < 2:
        raise ValueError("need n >= 2")
    return MpsPurityState([np.ones((1, 2, 1)) for _ in range(n)])


# --- gates -------------------------------------------------------------------

def _shift_left_ortho(tensors, k):
    """Make site k left-orthonormal, pushing the remainder into site k+1."""
    t = tensors[k]
    dl, d, dr = t.shape
    q, r = np.linalg.qr(t.reshape(dl * d, dr))
    tensors[k] = q.reshape(dl, d, q.shape[1])
    tensors[k + 1] = np.einsum("ab,bjc->ajc", r, tensors[k + 1])


def _shift_right_ortho(tensors, k):
    """Make site k right-orthonormal, pushing the remainder into site k-1."""
    t = tensors[k]
    dl, d, dr = t.shape
    q, r = np.linalg.qr(t.reshape(dl, d * dr).T)
    tensors[k] = q.T.reshape(q.shape[1], d, dr)
    tensors[k - 1] = np.einsum("aib,cb->aic", tensors[k - 1], r)


def move_center(state: MpsPurityState, k: int) -> None:
    if state.center is None:
        for j in range(k):
            _shift_left_ortho(state.tensors, j)
        for j in range(state.n - 1, k, -1):
            _shift_right_ortho(state.tensors, j)
    else:
        for j in range(state.center, k):
            _shift_left_ortho(state.tensors, j)
        for j in range(state.center, k, -1):
            _shift_right_ortho(state.tensors, j)
    state.center = k


def _apply_adjacent(state: MpsPurityState, m: np.ndarray, pos: int,
                    policy: TruncationPolicy) -> float:
    """Gate on chain positions (pos, pos+1), 0-based; returns discarded weight.

    In the canonical gauge the two sites are first made the orthogonality
    centre, so the local singular values are the true Schmidt values and the
    truncation is optimal; the split then leaves the centre on pos+1.  The
    "sqrt" gauge splits symmetrically without any sweep.
    """
    canonical = policy.gauge == "canonical"
    if canonical:
        move_center(state, pos)
    a, b = state.tensors[pos], state.tensors[pos + 1]
    dl, dr = a.shape[0], b.shape[2]
    theta = np.einsum("aib,bjc->aijc", a, b).reshape(dl, 4, dr)
    theta = np.einsum("kl,alc->akc", m, theta).reshape(dl, 2, 2, dr)
    mat = theta.reshape(dl * 2, 2 * dr)
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg as la
        u, s, vt = la.svd(mat, full_matrices=False, lapack_driver="gesvd")
    if s[0] == 0.0:
        keep = 1
    else:
        keep = int(np.sum(s > policy.sigma_min * s[0]))
        keep = max(1, min(keep, policy.chi))
    total = float(np.sum(s ** 2))
    disc = float(np.sum(s[keep:] ** 2) / total) if total > 0 else 0.0
    if canonical:
        state.tensors[pos] = u[:, :keep].reshape(dl, 2, keep)
        state.tensors[pos + 1] = (s[:keep, None] * vt[:keep]).reshape(keep, 2, dr)
        state.center = pos + 1
    else:
        sq = np.sqrt(s[:keep])
        state.tensors[pos] = (u[:, :keep] * sq).reshape(dl, 2, keep)
        state.tensors[pos + 1] = (sq[:, None] * vt[:keep]).reshape(keep, 2, dr)
        state.center = None
    return disc


def mps_apply_gate(state: MpsPurityState, m: np.ndarray, bond: tuple[int, int],
                   policy: TruncationPolicy | None = None) -> MpsPurityState:
    """Apply a 4x4 primed matrix on (qubit i, qubit j), in place.

    Non-adjacent bonds (including the ring bond (n, 1)) are brought together
    with exact SWAPs, acted on, and swapped back.
    """
    policy = policy or TruncationPolicy()
    i, j = bond
    n = state.n
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise ValueError(f"bad bond {bond}")
    lo, hi = sorted((i, j))
    mm = m if i < j else SWAP_PRIMED @ m @ SWAP_PRIMED
    disc = 0.0
    # move qubit lo up to position hi-1
    for p in range(lo - 1, hi - 2):
        disc += _apply_adjacent(state, SWAP_PRIMED, p, policy)
    disc += _apply_adjacent(state, mm, hi - 2, policy)
    for p in range(hi - 3, lo - 2, -1):
        disc += _apply_adjacent(state, SWAP_PRIMED, p, policy)
    state.discarded.append(disc)
    if disc > policy.warn_weight and not state.flagged:
        state.flagged = True
        warnings.warn(f"truncation discarded weight {disc:.2e} at bond {bond}")
    return state


def mps_purity_series(n: int, prot: Protocol, g: GateParams, mask: str | None = None,
                      t_max: int = 20, policy: TruncationPolicy | None = None) -> RateTrace:
    policy = policy or TruncationPolicy()
    mask = mask or symmetric_mask(n)
    if len(mask) != n:
        raise ValueError("mask length must equal n")
    m = build_two_site(g, "primed").matrix
    st = mps_initial(n)
    iinf = i_inf_mask(mask)
    bits = [1 - int(c) for c in mask]
    I = [st.contract(bits)]
    chi = [st.max_bond]
    dw = [0.0]
    for _ in range(t_max):
        before = len(st.discarded)
        for b in prot.bonds:
            mps_apply_gate(st, m, b, policy)
        I.append(st.contract(bits))
        chi.append(st.max_bond)
        dw.append(float(sum(st.discarded[before:])))
    I = np.array(I)
    dI = I - iinf
    return RateTrace(n, mask, boundary_area(prot), np.arange(t_max + 1), I, dI, iinf,
                     meta={"gate": g.label, "T": prot.T, "engine": "mps", "chi": policy.chi,
                           "flagged": st.flagged},
                     extra={"chi_max": chi, "discarded_weight": dw})


def left_orthogonalize(state: MpsPurityState) -> MpsPurityState:
    """QR sweep; amplitudes are unchanged."""
    out = state.copy()
    out.center = None
    for k in range(out.n - 1):
        _shift_left_ortho(out.tensors, k)
    out.center = out.n - 1
    return out


__all__ = [
    "MpsPurityState", "TruncationPolicy", "SchmidtPair", "steady_mps", "steady_mps_diagonal",
    "mps_initial", "mps_apply_gate", "mps_purity_series", "left_orthogonalize", "schmidt_pair",
    "x_norm", "SWAP_PRIMED", "NOISE_FLOOR",
]
