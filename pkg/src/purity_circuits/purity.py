"""Dense evolution of purity vectors and rate diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .gates import A_SITE, A_SITE_INV, GateParams, TwoSiteMatrix, build_two_site
from .protocols import Protocol

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
NOISE_FLOOR = 1e-15
DENSE_CAP = 26


class DenseCapError(MemoryError):
    pass


@dataclass
class PurityVector:
    n: int
    basis: str
    data: np.ndarray

    def __post_init__(self):
        if self.basis not in ("primed", "rotated"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.data.shape != (2 ** self.n,):
            raise ValueError("data must have length 2^n")


# --- bipartition masks -----------------------------------------------------

def mask_bits(mask: str) -> int:
    """Integer with bit (n - q) set when qubit q is in subsystem A."""
    if set(mask) - {"0", "1"}:
        raise ValueError(f"mask must be a 0/1 string, got {mask!r}")
    return int(mask, 2)


def mask_index(mask: str) -> int:
    """State index of the basis vector labelling this bipartition (A = up = 0)."""
    n = len(mask)
    return (~mask_bits(mask)) & ((1 << n) - 1)


def symmetric_mask(n: int) -> str:
    return "1" * (n // 2) + "0" * (n - n // 2)


def n_a(mask: str) -> int:
    return mask.count("1")


def i_inf(n: int, na: int) -> float:
    """Average purity of a random pure state on n qubits for a cut n_A | n - n_A."""
    return (2.0 ** na + 2.0 ** (n - na)) / (1.0 + 2.0 ** n)


def i_inf_mask(mask: str) -> float:
    return i_inf(len(mask), n_a(mask))


# --- basis vectors ---------------------------------------------------------

def _kron_all(v: np.ndarray, n: int) -> np.ndarray:
    out = np.ones(1)
    for _ in range(n):
        out = np.kron(out, v)
    return out


def to_rotated_vector(primed: np.ndarray, n: int) -> np.ndarray:
    t = primed.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(A_SITE_INV, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def to_primed_vector(rotated: np.ndarray, n: int) -> np.ndarray:
    t = rotated.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(A_SITE, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def initial_vector(n: int, basis: str = "rotated") -> PurityVector:
    if n < 2:
        raise ValueError("need n >= 2")
    if basis == "primed":
        return PurityVector(n, basis, np.ones(2 ** n))
    if basis == "rotated":
        v = np.zeros(2 ** n)
        v[0] = 1.0
        return PurityVector(n, basis, v)
    raise ValueError(f"unknown basis {basis!r}")


def steady_scale(n: int) -> float:
    """Weight of the raw steady vector in the long-time state:
    <Phi_inf|Phi_0> / <Phi_inf|Phi_inf> = 3^{n/2} * 2 / (4^n + 2^n)."""
    return 2.0 * 3.0 ** (n / 2) / (4.0 ** n + 2.0 ** n)


def steady_raw(n: int) -> np.ndarray:
    """Even-parity projection of (sqrt3, 1)^{x n}: 3^{(n-w)/2} on even w."""
    phi = _kron_all(np.array([np.sqrt(3.0), 1.0]), n)
    z = _kron_all(np.array([1.0, -1.0]), n)
    return 0.5 * (phi + z * phi)


def steady_vector(n: int, basis: str = "rotated", scale: str = "physical") -> PurityVector:
    """Long-time purity vector.

    ``scale="physical"`` gives the limit of M^t Phi_0 (empty-subsystem entry 1
    in the primed basis); ``scale="raw"`` gives the integer-power form.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    v = steady_raw(n)
    if scale == "physical":
        v = v * steady_scale(n)
    elif scale != "raw":
        raise ValueError(f"unknown scale {scale!r}")
    if basis == "rotated":
        return PurityVector(n, basis, v)
    if basis == "primed":
        return PurityVector(n, basis, to_primed_vector(v, n))
    raise ValueError(f"unknown basis {basis!r}")


def half_vector(mask: str) -> np.ndarray:
    """Rotated-basis projector (A^T)^{x n} e_mask: <half|x> reads I_mask."""
    n = len(mask)
    e = np.zeros(2 ** n)
    e[mask_index(mask)] = 1.0
    t = e.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(A_SITE.T, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


# --- gate application ------------------------------------------------------

def apply_gate(state: PurityVector, m: TwoSiteMatrix, bond: tuple[int, int],
               inplace: bool = False) -> PurityVector:
    if m.basis != state.basis:
        raise ValueError(f"basis mismatch: state is {state.basis}, matrix is {m.basis}")
    for q in bond:
        if not 1 <= q <= state.n:
            raise ValueError(f"bond {bond} outside 1..{state.n}")
    out = state if inplace else PurityVector(state.n, state.basis, state.data.copy())
    kernels.apply_inplace(out.data, m.matrix, state.n, bond)
    return out


def apply_period(x: np.ndarray, n: int, prot: Protocol, mat: np.ndarray) -> None:
    kernels.apply_sequence(x, mat, n, prot.bonds)


def period_matrix(n: int, prot: Protocol, g: GateParams, basis: str = "rotated") -> np.ndarray:
    """Dense 2^n x 2^n one-period product (small n only)."""
    if n > 13:
        raise DenseCapError(f"dense period matrix at n={n} is too large")
    mat = build_two_site(g, basis).matrix
    cols = np.eye(2 ** n)  # row k holds P e_k
    for k in range(cols.shape[0]):
        kernels.apply_sequence(cols[k], mat, n, prot.bonds)
    return np.ascontiguousarray(cols.T)


# --- traces ----------------------------------------------------------------

@dataclass
class RateTrace:
    n: int
    mask: str
    boundary_area: int
    t: np.ndarray
    I: np.ndarray
    dI: np.ndarray
    I_inf: float
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # engine-specific per-step columns

    @property
    def dS2_bits(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return -np.log2(np.abs(self.dI))

    @property
    def reliable(self) -> np.ndarray:
        return np.abs(self.dI) >= NOISE_FLOOR

    def local_rate(self):
        return local_rate(self)

    def rows(self):
        rate, flip, ok = local_rate(self)
        for k in range(len(self.t)):
            yield {
                "t": int(self.t[k]),
                "I": float(self.I[k]),
                "I_minus_Iinf": float(self.dI[k]),
                "dS2_bits": float(self.dS2_bits[k]),
                "local_rate_bits": float(rate[k]) if k < len(rate) and ok[k] else float("nan"),
                "sign_flip": bool(flip[k]) if k < len(flip) else False,
                **{key: val[k] for key, val in self.extra.items()},
            }


def boundary_area(prot: Protocol) -> int:
    return 2 if prot.boundary == "pbc" else 1


def purity_series(n: int, prot: Protocol, g: GateParams, mask: str | None = None,
                  t_max: int = 20, cap: int = DENSE_CAP) -> RateTrace:
    """Purity I(t) at integer periods from the dense rotated-basis evolution of
    Phi_0 - Phi_inf."""
    if n > cap:
        raise DenseCapError(
            f"n={n} exceeds the dense cap {cap} (2^n doubles); use the MPS engine "
            "(evolve --engine mps) or raise the cap")
    if prot.n != n:
        raise ValueError("protocol size does not match n")
    mask = mask or symmetric_mask(n)
    if len(mask) != n:
        raise ValueError("mask length must equal n")
    mat = build_two_site(g, "rotated").matrix
    x = np.empty(2 ** n)
    kernels.fill_subtracted(x, steady_scale(n))
    am = mask_bits(mask)
    iinf = i_inf_mask(mask)
    dI = [kernels.project_half(x, am)]
    for _ in range(t_max):
        apply_period(x, n, prot, mat)
        dI.append(kernels.project_half(x, am))
    dI = np.array(dI)
    del x
    return RateTrace(n, mask, boundary_area(prot), np.arange(t_max + 1), iinf + dI, dI, iinf,
                     meta={"gate": g.label, "T": prot.T, "boundary": prot.boundary})


def local_rate(trace: RateTrace):
    """Per-step rate log2|dI(t)/dI(t+1)| (bits), sign-flip flags and a
    reliability mask (both points above the noise floor)."""
    d = np.asarray(trace.dI, dtype=float)
    if len(d) < 2:
        raise ValueError("need at least 2 points")
    a, b = d[:-1], d[1:]
    ok = (np.abs(a) >= NOISE_FLOOR) & (np.abs(b) >= NOISE_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(ok, np.log2(np.abs(a) / np.abs(b)), np.nan)
    flip = np.sign(a) * np.sign(b) < 0
    return rate, flip, ok


@dataclass
class RateSummary:
    r_E: float
    v_E: float
    t_inf: float
    t_c: float | None
    window: tuple[int, int]

    @property
    def rate_bits(self) -> float:
        return self.r_E / LN2


def detect_tc(rate: np.ndarray, width: int = 3, threshold: float = 0.3) -> float | None:
    """Half-integer time of the largest jump between adjacent windows of the
    local rate, if it exceeds ``threshold`` bits/step."""
    best, where = 0.0, None
    r = np.asarray(rate, dtype=float)
    for k in range(width, len(r) - width + 1):
        left, right = r[k - width:k], r[k:k + width]
        if np.isnan(left).any() or np.isnan(right).any():
            continue
        jump = abs(right.mean() - left.mean())
        if jump > best:
            best, where = jump, k
    if where is None or best < threshold:
        return None
    return float(where)


def early_window(trace: RateTrace) -> tuple[int, int]:
    """t in [0, n_A/4]: well before saturation for every 1D protocol."""
    na = min(n_a(trace.mask), trace.n - n_a(trace.mask))
    return 0, max(2, na // 4)


def presaturation_window(trace: RateTrace) -> tuple[int, int]:
    """t from 1 until I - I_inf first changes sign.

    The two points that bracket the zero crossing are both dropped: the one
    before it is already dominated by the cancellation that produces the flip.
    """
    _, flip, ok = local_rate(trace)
    stop = len(trace.t) - 1
    bad = np.flatnonzero(flip | ~ok)
    if len(bad):
        stop = int(bad[0]) - 1
    return 1, stop


def rate_summary(trace: RateTrace, window: tuple[int, int] | None = None) -> RateSummary:
    """Least-squares slope of -ln|I - I_inf| over t in [t0, t1]."""
    t0, t1 = window if window is not None else (1, len(trace.t) - 1)
    sel = (trace.t >= t0) & (trace.t <= t1)
    flat = np.allclose(trace.dI, 0.0, atol=NOISE_FLOOR) or np.allclose(
        trace.dI, trace.dI[0], rtol=1e-13, atol=0)
    if sel.sum() < 3:
        raise ValueError("fit window needs at least 3 points")
    if flat:
        r = 0.0
    else:
        sel &= trace.reliable
        if sel.sum() < 3:
            raise ValueError("fit window needs at least 3 reliable points")
        y = -np.log(np.abs(trace.dI[sel]))
        r = float(np.polyfit(trace.t[sel], y, 1)[0])
    v = r / (trace.boundary_area * LN2)
    na = min(n_a(trace.mask), trace.n - n_a(trace.mask))
    t_inf = na * LN2 / r if r > 0 else float("inf")
    rate, _, _ = local_rate(trace)
    return RateSummary(r, v, t_inf, detect_tc(rate), (t0, t1))
