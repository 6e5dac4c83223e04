"""All-to-all random-pair protocol: averaged one-gate matrix and its gap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .gates import GateParams, build_two_site, canonical_coeffs
from .purity import DenseCapError
from .spectral import even_indices

MEAN_FIELD_CAP = 14


def two_site_sparse(n: int, m: np.ndarray, i: int, j: int) -> sp.csr_matrix:
    """M acting on qubits (i, j) of an n-qubit register, as a sparse matrix."""
    pa, pb = n - i, n - j
    k = np.arange(2 ** n)
    base = k[((k >> pa) & 1 == 0) & ((k >> pb) & 1 == 0)]
    idx = [base, base | (1 << pb), base | (1 << pa), base | (1 << pa) | (1 << pb)]
    rows, cols, vals = [], [], []
    for r in range(4):
        for c in range(4):
            if m[r, c] != 0.0:
                rows.append(idx[r])
                cols.append(idx[c])
                vals.append(np.full(len(base), m[r, c]))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(2 ** n, 2 ** n))


def mbar_matrix(n: int, g: GateParams, sparse: bool = False):
    """(2 / (n (n-1))) sum_{i<j} M_ij in the rotated basis."""
    if n > MEAN_FIELD_CAP:
        raise DenseCapError(f"mean-field matrix needs n <= {MEAN_FIELD_CAP}")
    if n < 2:
        raise ValueError("need n >= 2")
    m = build_two_site(g, "rotated").matrix
    acc = sp.csr_matrix((2 ** n, 2 ** n))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            acc = acc + two_site_sparse(n, m, i, j)
    acc = acc * (2.0 / (n * (n - 1)))
    return acc.tocsr() if sparse else acc.toarray()


@dataclass
class MeanFieldGap:
    n: int
    gate: GateParams
    numeric: float
    formula: float

    @property
    def residual(self) -> float:
        return self.numeric - self.formula


def gap_formula(n: int, g: GateParams) -> float:
    return 3.0 * canonical_coeffs(g).h / n


def mean_field_gap(n: int, g: GateParams, k: int = 6) -> MeanFieldGap:
    """1 - lambda_2 of the even-parity block, lambda = 1 states excluded."""
    mb = mbar_matrix(n, g, sparse=True)
    ev = even_indices(n)
    blk = mb[ev][:, ev]
    if blk.shape[0] <= 64:
        lam = np.linalg.eigvalsh(blk.toarray())
    else:
        lam = eigsh(blk, k=k, which="LA", return_eigenvectors=False, tol=1e-12)
    lam = np.sort(lam)[::-1]
    below = lam[lam < 1.0 - 1e-9]
    lam2 = float(below[0]) if len(below) else 1.0
    return MeanFieldGap(n, g, 1.0 - lam2, gap_formula(n, g))


def all_to_all_rate(g: GateParams) -> float:
    """r_E = 3h per n gates."""
    return 3.0 * canonical_coeffs(g).h
