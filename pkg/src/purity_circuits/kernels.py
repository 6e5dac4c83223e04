"""In-place kernels on length-2^n purity vectors.

Qubit q (1-based) lives on bit n - q of the state index, so qubit 1 is the
most significant bit.  Bit value 0 is "up".
"""

from __future__ import annotations

import numpy as np
from numba import config, get_num_threads, njit, prange

# the TBB probe only emits version warnings; the other layers are fine here
if config.THREADING_LAYER == "default":
    config.THREADING_LAYER = "workqueue"


def bit_of(n: int, q: int) -> int:
    return n - q


def _py_apply_dense(psi, m, pa, pb):
    lo = min(pa, pb)
    hi = max(pa, pb)
    ma = np.int64(1) << pa
    mb = np.int64(1) << pb
    lmask = (np.int64(1) << lo) - 1
    hmask = (np.int64(1) << hi) - 1
    for k in prange(psi.shape[0] >> 2):
        x = np.int64(k)
        x = ((x >> lo) << (lo + 1)) | (x & lmask)
        x = ((x >> hi) << (hi + 1)) | (x & hmask)
        i1 = x | mb
        i2 = x | ma
        i3 = i2 | mb
        a0 = psi[x]
        a1 = psi[i1]
        a2 = psi[i2]
        a3 = psi[i3]
        psi[x] = m[0, 0] * a0 + m[0, 1] * a1 + m[0, 2] * a2 + m[0, 3] * a3
        psi[i1] = m[1, 0] * a0 + m[1, 1] * a1 + m[1, 2] * a2 + m[1, 3] * a3
        psi[i2] = m[2, 0] * a0 + m[2, 1] * a1 + m[2, 2] * a2 + m[2, 3] * a3
        psi[i3] = m[3, 0] * a0 + m[3, 1] * a1 + m[3, 2] * a2 + m[3, 3] * a3


def _py_apply_parity(psi, m, pa, pb):
    # only the (uu, dd) and (ud, du) blocks are nonzero
    lo = min(pa, pb)
    hi = max(pa, pb)
    ma = np.int64(1) << pa
    mb = np.int64(1) << pb
    lmask = (np.int64(1) << lo) - 1
    hmask = (np.int64(1) << hi) - 1
    for k in prange(psi.shape[0] >> 2):
        x = np.int64(k)
        x = ((x >> lo) << (lo + 1)) | (x & lmask)
        x = ((x >> hi) << (hi + 1)) | (x & hmask)
        i1 = x | mb
        i2 = x | ma
        i3 = i2 | mb
        a0 = psi[x]
        a1 = psi[i1]
        a2 = psi[i2]
        a3 = psi[i3]
        psi[x] = m[0, 0] * a0 + m[0, 3] * a3
        psi[i3] = m[3, 0] * a0 + m[3, 3] * a3
        psi[i1] = m[1, 1] * a1 + m[1, 2] * a2
        psi[i2] = m[2, 1] * a1 + m[2, 2] * a2


_dense_ser = njit(cache=True)(_py_apply_dense)
_dense_par = njit(cache=True, parallel=True)(_py_apply_dense)
_parity_ser = njit(cache=True)(_py_apply_parity)
_parity_par = njit(cache=True, parallel=True)(_py_apply_parity)


@njit(cache=True)
def _sequence_ser(psi, m, pas, pbs, parity):
    for g in range(pas.shape[0]):
        if parity:
            _parity_ser(psi, m, pas[g], pbs[g])
        else:
            _dense_ser(psi, m, pas[g], pbs[g])


@njit(cache=True)
def _sequence_par(psi, m, pas, pbs, parity):
    for g in range(pas.shape[0]):
        if parity:
            _parity_par(psi, m, pas[g], pbs[g])
        else:
            _dense_par(psi, m, pas[g], pbs[g])


# below this size thread start-up costs more than the loop itself
PARALLEL_MIN_SIZE = 1 << 16


def _use_parallel(size: int) -> bool:
    return size >= PARALLEL_MIN_SIZE and get_num_threads() > 1


def is_parity_blocked(m: np.ndarray) -> bool:
    return not (np.any(m[0, 1:3]) or np.any(m[3, 1:3])
                or np.any(m[1:3, 0]) or np.any(m[1:3, 3]))


def apply_inplace(psi: np.ndarray, m: np.ndarray, n: int, bond: tuple[int, int]) -> None:
    """psi <- M_bond psi, with M acting on (qubit bond[0], qubit bond[1])."""
    i, j = bond
    m = np.ascontiguousarray(m, dtype=np.float64)
    par = _use_parallel(psi.shape[0])
    if is_parity_blocked(m):
        kern = _parity_par if par else _parity_ser
    else:
        kern = _dense_par if par else _dense_ser
    kern(psi, m, bit_of(n, i), bit_of(n, j))


def apply_sequence(psi: np.ndarray, m: np.ndarray, n: int, bonds) -> None:
    """Apply the same 4x4 matrix on every bond in order, in one compiled call."""
    if len(bonds) == 0:
        return
    m = np.ascontiguousarray(m, dtype=np.float64)
    b = np.asarray(bonds, dtype=np.int64).reshape(-1, 2)
    seq = _sequence_par if _use_parallel(psi.shape[0]) else _sequence_ser
    seq(psi, m, n - b[:, 0], n - b[:, 1], is_parity_blocked(m))


def apply_reference(psi: np.ndarray, m: np.ndarray, n: int, bond: tuple[int, int]) -> np.ndarray:
    """Plain numpy version of the same contraction (returns a new array)."""
    i, j = bond
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, (i - 1, j - 1), (0, 1))
    shp = t.shape
    t = (m @ t.reshape(4, -1)).reshape(shp)
    t = np.moveaxis(t, (0, 1), (i - 1, j - 1))
    return np.ascontiguousarray(t).reshape(-1)


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True, parallel=True)
def _fill_subtracted(out, scale):
    # rotated Phi_0 - Phi_inf, Phi_inf = scale * 3^{(n-w)/2} on even w
    n = 0
    while (np.int64(1) << n) < out.shape[0]:
        n += 1
    s3 = np.sqrt(3.0)
    for k in prange(out.shape[0]):
        w = _popcount(np.int64(k))
        if w % 2 == 0:
            out[k] = -scale * s3 ** (n - w)
        else:
            out[k] = 0.0
    out[0] += 1.0


@njit(cache=True, parallel=True)
def _project_half(x, amask):
    # sum_s x[s] * prod_q A[mask_q, s_q], A = [[1, -1/sqrt3], [1, 1/sqrt3]]
    inv = 1.0 / np.sqrt(3.0)
    pw = np.empty(64)
    pw[0] = 1.0
    for k in range(1, 64):
        pw[k] = pw[k - 1] * inv
    acc = 0.0
    for k in prange(x.shape[0]):
        kk = np.int64(k)
        w = _popcount(kk)
        neg = _popcount(kk & amask) & 1
        acc += (1.0 - 2.0 * neg) * x[k] * pw[w]
    return acc


def project_half(x: np.ndarray, amask: int) -> float:
    """<Phi_half | x> for a rotated-basis vector; ``amask`` has bit set for
    qubits in subsystem A."""
    return float(_project_half(x, np.int64(amask)))


def fill_subtracted(out: np.ndarray, scale: float) -> None:
    _fill_subtracted(out, float(scale))
