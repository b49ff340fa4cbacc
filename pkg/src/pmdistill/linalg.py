"""Small dense complex linear algebra for 1- to 4-qubit operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Joint four-qubit
states use the pair-major order ``(A1, B1, A2, B2)``: pair 1 before pair 2,
Alice's qubit before Bob's within a pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 16
HERMITIAN_TOL = 1e-10

PAIR_MAJOR = ("A1", "B1", "A2", "B2")
NODE_MAJOR = ("A1", "A2", "B1", "B2")


def _as_matrix(a, name="a") -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class QubitOrder:
    """Ordered qubit labels fixing the tensor-factor convention of a state."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"qubit labels must be distinct: {labels}")
        if len(labels) not in (1, 2, 4):
            raise ValueError(f"expected 1, 2 or 4 qubits, got {len(labels)}")

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown qubit label {label!r}; order is {self.labels}") from None


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def kron(a, b) -> np.ndarray:
    """Kronecker product, restricted to results of at most 16x16."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if rows > MAX_DIM or cols > MAX_DIM:
        raise ValueError(f"kron result {rows}x{cols} exceeds {MAX_DIM}x{MAX_DIM}")
    return np.kron(a, b)


def kron_all(*mats) -> np.ndarray:
    out = _as_matrix(mats[0])
    for m in mats[1:]:
        out = kron(out, m)
    return out


def dagger(a) -> np.ndarray:
    return _as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(_as_matrix(a)))


def partial_trace(rho, order: QubitOrder | Sequence[str], traced: Iterable[str]) -> np.ndarray:
    """Trace out the qubits named in ``traced``.

    Remaining qubits keep their relative order from ``order``.
    """
    if not isinstance(order, QubitOrder):
        order = QubitOrder(tuple(order))
    rho = _as_matrix(rho, "rho")
    if rho.shape[0] != rho.shape[1]:
        raise ValueError("partial_trace needs a square matrix")
    n = _num_qubits(rho.shape[0])
    if n != len(order):
        raise ValueError(f"matrix acts on {n} qubits but order names {len(order)}")
    idx = sorted({order.index(label) for label in traced})
    t = rho.reshape((2,) * (2 * n))
    # trace the highest axes first so the lower indices stay valid
    for k, q in enumerate(reversed(idx)):
        m = n - k
        t = np.trace(t, axis1=q, axis2=q + m)
    keep = n - len(idx)
    d = 1 << keep
    return t.reshape(d, d)


def permute_qubits(rho, order: QubitOrder | Sequence[str], new_order: Sequence[str]) -> np.ndarray:
    """Re-express a state given in ``order`` in the qubit order ``new_order``."""
    if not isinstance(order, QubitOrder):
        order = QubitOrder(tuple(order))
    new = QubitOrder(tuple(new_order))
    if set(new.labels) != set(order.labels):
        raise ValueError(f"{new.labels} is not a permutation of {order.labels}")
    rho = _as_matrix(rho, "rho")
    n = len(order)
    perm = [order.index(label) for label in new.labels]
    t = rho.reshape((2,) * (2 * n)).transpose(perm + [p + n for p in perm])
    return t.reshape(rho.shape)


def permutation_operator(order: Sequence[str], new_order: Sequence[str]) -> np.ndarray:
    """Unitary ``P`` with ``P @ rho @ P.conj().T == permute_qubits(rho, order, new_order)``."""
    order = QubitOrder(tuple(order))
    new = QubitOrder(tuple(new_order))
    n = len(order)
    dim = 1 << n
    src = [order.index(label) for label in new.labels]
    p = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        j = 0
        for q in src:
            j = (j << 1) | bits[q]
        p[j, i] = 1.0
    return p


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = _as_matrix(a)
    return a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.conj().T), initial=0.0)) <= tol


def hermitian_eig(a, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.

    Returns ``(w, v)`` with ``a == v @ diag(w) @ v^dagger`` and eigenvectors in
    the columns of ``v``.
    """
    a = _as_matrix(a)
    if not is_hermitian(a, tol):
        raise ValueError("hermitian_eig: input is not Hermitian within tolerance")
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w[::-1].copy(), v[:, ::-1].copy()


def svd_2x2(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``a == u @ diag(s) @ v`` with unitary ``u``, ``v`` and descending ``s >= 0``."""
    a = _as_matrix(a)
    if a.shape != (2, 2):
        raise ValueError(f"svd_2x2 expects a 2x2 matrix, got {a.shape}")
    u, s, vh = np.linalg.svd(a)
    return u, s, vh


@dataclass(frozen=True)
class DensityCheck:
    """Outcome of :func:`is_density`; truthy iff every check passed."""

    hermitian_error: float
    trace_error: float
    min_eigenvalue: float
    tol: float
    failures: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok


def is_density(rho, tol: float = HERMITIAN_TOL) -> DensityCheck:
    rho = np.asarray(rho, dtype=np.complex128)
    failures = []
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return DensityCheck(np.inf, np.inf, -np.inf, tol, ("shape",))
    if not np.all(np.isfinite(rho)):
        return DensityCheck(np.inf, np.inf, -np.inf, tol, ("finite",))
    herm = float(np.max(np.abs(rho - rho.conj().T), initial=0.0))
    tr = abs(complex(np.trace(rho)) - 1.0)
    lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if herm > tol:
        failures.append("hermitian")
    if tr > tol:
        failures.append("trace")
    if lam < -tol:
        failures.append("positivity")
    return DensityCheck(herm, tr, lam, tol, tuple(failures))


def ket(*bits: int) -> np.ndarray:
    """Computational basis column vector ``|b1 b2 ...>``."""
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    v = np.zeros(1 << len(bits), dtype=np.complex128)
    v[idx] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())


PHI_PLUS = (ket(0, 0) + ket(1, 1)) / np.sqrt(2)
PHI_MINUS = (ket(0, 0) - ket(1, 1)) / np.sqrt(2)
PSI_PLUS = (ket(0, 1) + ket(1, 0)) / np.sqrt(2)
PSI_MINUS = (ket(0, 1) - ket(1, 0)) / np.sqrt(2)


def fidelity_phi_plus(rho) -> float:
    """``<Phi+| rho |Phi+>`` for a two-qubit state."""
    rho = np.asarray(rho)
    return float(np.real(PHI_PLUS.conj() @ rho @ PHI_PLUS))
