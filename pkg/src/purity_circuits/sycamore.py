"""Effective eigenvalues and purity decay for layered protocols on the 3 x m grid."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .gates import GateParams, canonical_coeffs
from .protocols import Geometry, expand_layer_protocol, parse_geometry
from .purity import DENSE_CAP, DenseCapError, RateTrace, purity_series, rate_summary, symmetric_mask
from .spectral import even_sector_matrix, power_lambda2

# below this size the even sector is diagonalized directly
DIRECT_MAX_N = 12


@dataclass
class EffectiveEigenvalue:
    lam2: float  # |lambda_2| of one full period
    T: int
    n: int
    word: str
    gate: str
    method: str = "dense"
    converged: bool = True

    @property
    def lam_eff(self) -> float:
        """|lambda_2| renormalized to a period of n gates."""
        if self.T == 0:
            return 1.0
        return self.lam2 ** (self.n / self.T)


def load_geometry(name: str) -> Geometry:
    """Geometry file shipped in the package data directory."""
    text = resources.files("purity_circuits").joinpath("data").joinpath(name).read_text()
    return parse_geometry(text)


def sycamore_lambda(geom: Geometry, word: str, g: GateParams, max_iters: int = 4000,
                    tol: float = 1e-7, method: str = "auto") -> EffectiveEigenvalue:
    prot = expand_layer_protocol(geom, word)
    n = geom.n
    if prot.T == 0:
        return EffectiveEigenvalue(1.0, 0, n, word, g.label)
    if method == "auto":
        method = "dense" if n <= DIRECT_MAX_N else "power"
    if method == "dense":
        ev = np.abs(np.linalg.eigvals(even_sector_matrix(n, prot, g)))
        ev = np.sort(ev)[::-1]
        return EffectiveEigenvalue(float(ev[1]), prot.T, n, word, g.label)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    if n > DENSE_CAP:
        raise DenseCapError(f"power method on n={n} needs a 2^n vector; cap is {DENSE_CAP}")
    res = power_lambda2(n, prot, g, max_iters=max_iters, tol=tol)
    return EffectiveEigenvalue(res.lam2, prot.T, n, word, g.label, "power", res.converged)


@dataclass
class SycamoreComparison:
    trace: RateTrace
    fitted_bits: float  # per period, from -log2|I - I_inf|
    spectral_bits: float | None  # -log2|lambda_2| per period
    window: tuple[int, int]

    @property
    def relative_gap(self) -> float | None:
        if self.spectral_bits is None or self.spectral_bits == 0:
            return None
        return abs(self.fitted_bits - self.spectral_bits) / self.spectral_bits


def sycamore_purity(geom: Geometry, word: str, g: GateParams, t_max: int = 12,
                    mask: str | None = None, window: tuple[int, int] | None = None,
                    with_lambda: bool = True) -> SycamoreComparison:
    """Dense purity trace with the geometry's default cut, plus a comparison of
    its late-time slope to the one-period gap."""
    prot = expand_layer_protocol(geom, word)
    mask = mask or geom.mask or symmetric_mask(geom.n)
    trace = purity_series(geom.n, prot, g, mask, t_max)
    trace.meta["word"] = word
    if window is None:
        ok = np.flatnonzero(trace.reliable)
        last = int(trace.t[ok[-1]]) if len(ok) else t_max
        window = (max(1, last // 2), last)
    if canonical_coeffs(g).h == 0 or np.allclose(trace.dI, trace.dI[0], rtol=1e-13, atol=1e-15):
        fitted = 0.0
    else:
        fitted = rate_summary(trace, window).rate_bits
    spectral = None
    if with_lambda and canonical_coeffs(g).h > 0:
        eff = sycamore_lambda(geom, word, g)
        spectral = -np.log2(eff.lam2)
        trace.meta["lambda2"] = eff.lam2
        trace.meta["lambda_eff"] = eff.lam_eff
    return SycamoreComparison(trace, fitted, spectral, window)
