"""Hot path of one recurrence round on two qubit pairs.

Both backends build the full 16x16 joint state in ``(A1, B1, A2, B2)`` order,
apply the bilateral CNOT (A1 -> A2, B1 -> B2), project the target qubits on
each of the four measurement outcomes and trace out pair 2. The result is an
array ``out[mA, mB]`` of unnormalised 4x4 source-pair states.
"""
from __future__ import annotations

import numpy as np

from . import linalg
from ._accel import njit, resolve_backend

ORDER = linalg.QubitOrder(linalg.PAIR_MAJOR)


def _cnot_perm() -> np.ndarray:
    perm = np.empty(16, dtype=np.int64)
    for i in range(16):
        a1, b1, a2, b2 = (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1
        perm[i] = (a1 << 3) | (b1 << 2) | ((a2 ^ a1) << 1) | (b2 ^ b1)
    return perm


CNOT_PERM = _cnot_perm()


def bilateral_cnot_operator() -> np.ndarray:
    u = np.zeros((16, 16), dtype=np.complex128)
    u[CNOT_PERM, np.arange(16)] = 1.0
    return u


BILATERAL_CNOT = bilateral_cnot_operator()


def _target_projector(m_a: int, m_b: int) -> np.ndarray:
    pa = linalg.projector(linalg.ket(m_a))
    pb = linalg.projector(linalg.ket(m_b))
    eye = linalg.identity(2)
    return linalg.kron_all(eye, eye, pa, pb)


_PROJECTORS = [[_target_projector(a, b) for b in range(2)] for a in range(2)]


def _branches_numpy(rho1, rho2):
    joint = linalg.kron(rho1, rho2)
    joint = BILATERAL_CNOT @ joint @ BILATERAL_CNOT.conj().T
    out = np.empty((2, 2, 4, 4), dtype=np.complex128)
    for m_a in range(2):
        for m_b in range(2):
            proj = _PROJECTORS[m_a][m_b]
            out[m_a, m_b] = linalg.partial_trace(proj @ joint @ proj, ORDER, ("A2", "B2"))
    return out


@njit(cache=True, nogil=True)
def _branches_numba(rho1, rho2, perm):
    joint = np.empty((16, 16), dtype=np.complex128)
    for i in range(16):
        for j in range(16):
            joint[perm[i], perm[j]] = rho1[i >> 2, j >> 2] * rho2[i & 3, j & 3]
    out = np.zeros((2, 2, 4, 4), dtype=np.complex128)
    for m_a in range(2):
        for m_b in range(2):
            t = (m_a << 1) | m_b
            for i in range(4):
                for j in range(4):
                    out[m_a, m_b, i, j] = joint[(i << 2) | t, (j << 2) | t]
    return out


def pair_branches(rho1, rho2=None, backend=None) -> np.ndarray:
    """Unnormalised kept-pair states for every target outcome ``(mA, mB)``."""
    rho1 = np.ascontiguousarray(rho1, dtype=np.complex128)
    rho2 = rho1 if rho2 is None else np.ascontiguousarray(rho2, dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        return _branches_numba(rho1, rho2, CNOT_PERM)
    return _branches_numpy(rho1, rho2)


@njit(cache=True, nogil=True)
def _local_unitary_numba(ua, ub, rho):
    u = np.empty((4, 4), dtype=np.complex128)
    for i in range(4):
        for j in range(4):
            u[i, j] = ua[i >> 1, j >> 1] * ub[i & 1, j & 1]
    return u @ rho @ u.conj().T


def local_unitary(ua, ub, rho, backend=None) -> np.ndarray:
    """``(ua (x) ub) rho (ua (x) ub)^dagger``."""
    if resolve_backend(backend) == "numba":
        return _local_unitary_numba(np.ascontiguousarray(ua, dtype=np.complex128),
                                    np.ascontiguousarray(ub, dtype=np.complex128),
                                    np.ascontiguousarray(rho, dtype=np.complex128))
    u = linalg.kron(ua, ub)
    return u @ rho @ u.conj().T
