"""Non-Hermitian spectral analysis of one-period transfer matrices."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la

from . import kernels
from .gates import XY, GateParams, build_two_site, gate_eigensystem
from .protocols import Protocol, build_brickwall
from .purity import (DenseCapError, apply_period, half_vector, steady_raw,
                     steady_scale, symmetric_mask)

log = logging.getLogger(__name__)

EVEN_SECTOR_CAP = 14
CLUSTER_TOL = 1e-6


def even_indices(n: int) -> np.ndarray:
    k = np.arange(2 ** n)
    w = np.zeros_like(k)
    for b in range(n):
        w += (k >> b) & 1
    return k[w % 2 == 0]


def even_sector_matrix(n: int, prot: Protocol, g: GateParams) -> np.ndarray:
    """One-period rotated-basis product restricted to even parity."""
    if n > EVEN_SECTOR_CAP:
        raise DenseCapError(f"even-sector matrix needs n <= {EVEN_SECTOR_CAP}, got {n}")
    mat = build_two_site(g, "rotated").matrix
    idx = even_indices(n)
    out = np.empty((len(idx), len(idx)))
    col = np.empty(2 ** n)
    for c, k in enumerate(idx):
        col[:] = 0.0
        col[k] = 1.0
        apply_period(col, n, prot, mat)
        out[:, c] = col[idx]
    return out


# --- eigenpairs -------------------------------------------------------------

@dataclass
class EigenPair:
    lam: complex
    right: np.ndarray
    left: np.ndarray  # row vector, left @ M = lam * left
    parity: int = 1
    defective: bool = False


def _clusters(lam: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(lam.real)
    groups, used = [], np.zeros(len(lam), bool)
    for i in order:
        if used[i]:
            continue
        near = np.flatnonzero((np.abs(lam - lam[i]) < tol) & ~used)
        used[near] = True
        groups.append(near)
    return groups


def full_spectrum(m: np.ndarray, parity: int = 1, degen_tol: float = 1e-8,
                  defect_tol: float = 1e-10) -> list[EigenPair]:
    """All eigenpairs with biorthonormal left/right vectors, sorted by |lambda|.

    Within near-degenerate clusters the left vectors are re-mixed with the
    inverse overlap matrix.  Pairs whose overlap (or cluster overlap matrix) is
    numerically singular are flagged as defective and left unnormalized.
    """
    if m.shape[0] > 2 ** 13:
        raise DenseCapError("full_spectrum is limited to dimension 2^13")
    lam, vl, vr = la.eig(m, left=True, right=True)
    L = vl.conj().T  # rows are left vectors
    R = vr
    defective = np.zeros(len(lam), bool)
    scale = max(1.0, float(np.abs(lam).max()))
    for grp in _clusters(lam, degen_tol * scale):
        S = L[grp] @ R[:, grp]
        sv = np.linalg.svd(S, compute_uv=False)
        if sv.min() < defect_tol * sv.max() or sv.max() == 0:
            defective[grp] = True
            continue
        L[grp] = np.linalg.solve(S, L[grp])
    order = np.argsort(-np.abs(lam), kind="stable")
    n_def = int(defective.sum())
    if n_def:
        log.warning("%d eigenpairs flagged as defective", n_def)
    return [EigenPair(complex(lam[k]), R[:, k], L[k], parity, bool(defective[k])) for k in order]


def biorthogonality_error(pairs: list[EigenPair]) -> float:
    ok = [p for p in pairs if not p.defective]
    L = np.array([p.left for p in ok])
    R = np.array([p.right for p in ok]).T
    return float(np.abs(L @ R - np.eye(len(ok))).max())


# --- expansion --------------------------------------------------------------

@dataclass
class SpectralReport:
    pairs: list[EigenPair]
    c: np.ndarray
    d: np.ndarray
    stationary: np.ndarray  # True for lambda = 1 modes
    clusters: int
    excluded: int = 0

    @property
    def lam(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def reconstruct(self, t, selection=None) -> np.ndarray:
        """sum_j d_j lambda_j^t over non-stationary modes (or a selection)."""
        t = np.atleast_1d(np.asarray(t))
        sel = ~self.stationary if selection is None else np.asarray(selection)
        lam = self.lam[sel]
        d = self.d[sel]
        return np.array([(d * lam ** tt).sum() for tt in t])


def even_phi0(n: int) -> np.ndarray:
    v = np.zeros(2 ** (n - 1))
    v[0] = 1.0
    return v


def even_half(n: int, mask: str | None = None) -> np.ndarray:
    return half_vector(mask or symmetric_mask(n))[even_indices(n)]


def expansion_report(pairs: list[EigenPair], phi0: np.ndarray, phi_half: np.ndarray,
                     one_tol: float = 1e-8) -> SpectralReport:
    lam = np.array([p.lam for p in pairs])
    c = np.array([p.left @ phi0 for p in pairs])
    d = np.array([(phi_half @ p.right) * (p.left @ phi0) for p in pairs])
    bad = np.array([p.defective for p in pairs])
    if bad.any():
        warnings.warn(f"{bad.sum()} defective eigenpairs excluded from the expansion")
        c[bad] = 0.0
        d[bad] = 0.0
    stationary = np.abs(lam - 1.0) < one_tol
    nclus = len([g for g in _clusters(lam, CLUSTER_TOL) if len(g) > 1])
    return SpectralReport(pairs, c, d, stationary, nclus, int(bad.sum()))


def count_in_annulus(lam: np.ndarray, lo: float, hi: float) -> int:
    a = np.abs(lam)
    return int(((a >= lo) & (a <= hi)).sum())


@dataclass
class PhantomAnalysis:
    selection: np.ndarray
    lam_ref: float
    C: np.ndarray
    slope_bits: np.ndarray
    floor: float = 1e-300


def phantom_sum(report: SpectralReport, selection, lam_ref: float, t_max: int) -> PhantomAnalysis:
    """C(t) = |lam_ref|^{-t} |sum_k d_k lambda_k^t| over the selected modes."""
    sel = np.asarray(selection)
    if sel.dtype == bool:
        sel = np.flatnonzero(sel)
    if len(sel) == 0:
        raise ValueError("selection is empty")
    mask = np.zeros(len(report.pairs), bool)
    mask[sel] = True
    t = np.arange(t_max + 1)
    C = np.abs(report.reconstruct(t, mask)) / abs(lam_ref) ** t
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.log2(C[1:] / C[:-1])
    return PhantomAnalysis(sel, abs(lam_ref), C, slope)


# --- power iteration --------------------------------------------------------

@dataclass
class PowerResult:
    lam2: float
    converged: bool
    iters: int
    window: int
    log: list = field(default_factory=list)
    max_leak: float = 0.0
    method: str = "geometric"  # or "pair" (two-term recurrence fit)


def _window_estimates(logr: np.ndarray, m: int, k: int = 3):
    if len(logr) < k * m:
        return None
    tail = logr[len(logr) - k * m:]
    return np.exp(tail.reshape(k, m).mean(axis=1))


def _pair_fit(x0, x1, x2):
    """Fit x2 = alpha x1 + beta x0; returns (|largest root|, relative residual)."""
    g = np.array([[x1 @ x1, x1 @ x0], [x0 @ x1, x0 @ x0]])
    rhs = np.array([x1 @ x2, x0 @ x2])
    if abs(np.linalg.det(g)) < 1e-12 * g[0, 0] * g[1, 1]:
        return np.nan, np.inf  # a single real mode dominates
    alpha, beta = np.linalg.solve(g, rhs)
    res = np.linalg.norm(x2 - alpha * x1 - beta * x0) / np.linalg.norm(x2)
    roots = np.roots([1.0, -alpha, -beta])
    return float(np.abs(roots).max()), float(res)


def power_lambda2_op(apply: Callable[[np.ndarray], None], w0: np.ndarray, steady: np.ndarray,
                     max_iters: int = 2000, window: int | None = None, tol: float = 1e-8,
                     min_iters: int = 30, windows=range(2, 25), check_every: int = 10,
                     pair_fit: bool = True) -> PowerResult:
    """Deflated power iteration for |lambda_2| of a matrix-free operator.

    ``apply`` maps a vector in place; ``steady`` spans the lambda=1 direction and
    must be both a left and a right eigenvector (true for products of symmetric
    factors).  |lambda_2| is the geometric mean of consecutive norm ratios over
    a window of m steps, which averages out rotating complex pairs.  With
    ``window=None`` the window with the smallest spread over the last three
    windows is picked among ``windows``.

    The geometric mean keeps an O(1/m) bias when a complex pair has an
    irrational phase.  With ``pair_fit`` three consecutive iterates are also
    fitted to a two-term recurrence, which is exact once a single conjugate
    pair (or a +-lambda pair) dominates; that estimate is used when its
    residual is below ``tol``.
    """
    u = steady / np.linalg.norm(steady)
    w = w0.astype(float).copy()
    w -= u * (u @ w)
    w /= np.linalg.norm(w)
    logr = np.empty(max_iters)
    trail = []
    leak = 0.0
    ms = [window] if window is not None else list(windows)
    best = (np.inf, np.nan, ms[0])
    x0 = x1 = None
    n1 = 1.0
    last_pair = np.nan
    for it in range(1, max_iters + 1):
        apply(w)
        w -= u * (u @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return PowerResult(0.0, True, it, 1, trail, leak)
        w /= nrm
        leak = max(leak, abs(u @ w))
        logr[it - 1] = np.log(nrm)
        phase = it % check_every
        if pair_fit and phase == check_every - 2:
            x0 = w.copy()
        elif pair_fit and phase == check_every - 1 and x0 is not None:
            x1, n1 = w.copy(), nrm
        if it < min_iters or phase:
            continue
        best = (np.inf, np.nan, ms[0])
        for m in ms:
            est = _window_estimates(logr[:it], m)
            if est is None:
                continue
            spread = float(est.max() - est.min())
            if spread < best[0]:
                best = (spread, float(est[-1]), m)
        trail.append((it, best[1], best[0], best[2]))
        if best[0] < tol:
            return PowerResult(best[1], True, it, best[2], trail, leak)
        if pair_fit and x1 is not None:
            lam, res = _pair_fit(x0, n1 * x1, n1 * nrm * w)
            if res < tol and abs(lam - last_pair) < tol:
                return PowerResult(lam, True, it, 0, trail, leak, "pair")
            last_pair = lam if res < 1e-3 else np.nan
    warnings.warn("power iteration did not converge; returning best estimate")
    return PowerResult(best[1], False, max_iters, best[2], trail, leak)


def power_lambda2(n: int, prot: Protocol, g: GateParams, max_iters: int = 2000,
                  window: int | None = None, tol: float = 1e-8, seed: int = 1234,
                  windows=range(2, 25)) -> PowerResult:
    """|lambda_2| of the one-period product, iterating in the even sector."""
    mat = build_two_site(g, "rotated").matrix
    rng = np.random.default_rng(seed)
    w0 = rng.standard_normal(2 ** n)
    w0[np.setdiff1d(np.arange(2 ** n), even_indices(n))] = 0.0
    steady = steady_raw(n)
    return power_lambda2_op(lambda x: apply_period(x, n, prot, mat), w0, steady,
                            max_iters=max_iters, window=window, tol=tol, windows=windows)


# --- extrapolation ----------------------------------------------------------

@dataclass
class TdlFit:
    value: float
    coeffs: np.ndarray  # c_0 + c_1/n + c_2/n^2 + ...
    ill_conditioned: bool
    residual: float


def extrapolate_tdl(pairs, degree: int = 2, cond_max: float = 1e12) -> TdlFit:
    ns = np.array([p[0] for p in pairs], float)
    ys = np.array([p[1] for p in pairs], float)
    if len(ns) < degree + 2:
        raise ValueError(f"need at least {degree + 2} points for degree {degree}")
    X = np.vander(1.0 / ns, degree + 1, increasing=True)
    coef, res, *_ = np.linalg.lstsq(X, ys, rcond=None)
    cond = np.linalg.cond(X)
    resid = float(np.abs(X @ coef - ys).max())
    return TdlFit(float(coef[0]), coef, bool(cond > cond_max), resid)


# --- exact special eigenvectors ----------------------------------------------

@dataclass
class NinthEigenvector:
    v: np.ndarray
    even: np.ndarray
    odd: np.ndarray
    residual: float
    residual_even: float
    residual_odd: float


def _shift_sites(v: np.ndarray, n: int, k: int) -> np.ndarray:
    t = v.reshape((2,) * n)
    perm = [(q - k) % n for q in range(n)]  # new axis q takes old axis q - k
    return np.transpose(t, perm).reshape(-1)


def parity_split(v: np.ndarray, n: int):
    e = np.zeros(2 ** n, bool)
    e[even_indices(n)] = True
    ve = np.where(e, v, 0.0)
    return ve, v - ve


def ninth_eigenvector(n: int, alpha: float = np.sqrt(3.0), tol: float = 1e-10) -> NinthEigenvector:
    """Eigenvector of the PBC brick wall with the XY gate at eigenvalue 1/9."""
    if n < 4 or n % 2:
        raise ValueError("need even n >= 4")
    ev = gate_eigensystem(XY)
    v1, v2, v3 = ev[0][0], ev[1][0], ev[2][0]
    va = v1 + alpha * v2
    base = np.ones(1)
    for _ in range(n // 2 - 1):
        base = np.kron(base, va)
    base = np.kron(base, v3)
    v = sum(_shift_sites(base, n, 2 * i) for i in range(1, n // 2 + 1))
    prot = build_brickwall(n, "pbc")
    mat = build_two_site(XY, "rotated").matrix

    def resid(x):
        y = x.copy()
        apply_period(y, n, prot, mat)
        return float(np.linalg.norm(y - x / 9.0) / np.linalg.norm(x))

    ve, vo = parity_split(v, n)
    out = NinthEigenvector(v, ve, vo, resid(v), resid(ve), resid(vo))
    if out.residual > tol:
        raise ArithmeticError(f"1/9 eigenvector residual {out.residual:.3e} exceeds {tol}")
    return out


def odd_layer_residual(v: np.ndarray, n: int) -> float:
    """|M_o v + v/3| / |v| for the odd layer of the XY brick wall."""
    mat = build_two_site(XY, "rotated").matrix
    y = v.copy()
    for i in range(1, n, 2):
        kernels.apply_inplace(y, mat, n, (i, i + 1))
    return float(np.linalg.norm(y + v / 3.0) / np.linalg.norm(v))


# --- toy exceptional point ---------------------------------------------------

@dataclass
class ToyExceptional:
    eigvals: np.ndarray
    basis: np.ndarray  # columns x1, x2
    coeffs: np.ndarray
    defective: bool


def toy_exceptional(eps: float, a: float = 0.0) -> ToyExceptional:
    """M = [[1, 1-eps], [0, 1-eps]] and the expansion of y = (a, 1) in its
    eigenbasis x1 = (1, 0), x2 = (eps - 1, eps)."""
    m = np.array([[1.0, 1.0 - eps], [0.0, 1.0 - eps]])
    x = np.array([[1.0, eps - 1.0], [0.0, eps]])
    if eps == 0.0:
        return ToyExceptional(np.array([1.0, 1.0]), x, np.array([np.nan, np.nan]), True)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    coeffs = np.linalg.solve(x, np.array([a, 1.0]))
    lam = np.array([1.0, 1.0 - eps])
    assert np.allclose(m @ x, x * lam)
    return ToyExceptional(lam, x, coeffs, False)


def steady_even(n: int) -> np.ndarray:
    return steady_raw(n)[even_indices(n)] * steady_scale(n)
