"""Recurrence distillation: circuit rounds, scalar recurrences and drivers."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, linalg
from .channel import SpectralState, spectral_form
from .linalg import PHI_PLUS, PSI_PLUS, fidelity_phi_plus, projector

SQRT_HALF = 1.0 / math.sqrt(2.0)
PROBABILITY_FLOOR = 1e-12


class DistillationError(RuntimeError):
    pass


class ZeroSuccessProbability(DistillationError):
    """Both agreeing measurement branches vanished."""


class Protocol(str, enum.Enum):
    PROPOSED = "proposed"
    BBPSSW = "bbpssw"


def bell_diagonal(f: float) -> np.ndarray:
    """``F |Phi+><Phi+| + (1-F) |Psi+><Psi+|``."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {f}")
    return f * projector(PHI_PLUS) + (1.0 - f) * projector(PSI_PLUS)


@dataclass(frozen=True)
class RoundResult:
    f_next: float
    p_success: float
    rho_next: np.ndarray
    branches: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)


@dataclass
class DistillTrace:
    """Per-round ``(F_k, P_k)`` after ``f0``; ``rounds[k-1]`` belongs to round ``k``."""

    f0: float
    rounds: list[tuple[float, float]] = field(default_factory=list)
    reached_target: bool = False
    protocol: Protocol = Protocol.PROPOSED
    states: list[np.ndarray] = field(default_factory=list, repr=False)
    note: str = ""

    @property
    def k_final(self) -> int:
        return len(self.rounds)

    @property
    def fidelities(self) -> list[float]:
        return [self.f0] + [f for f, _ in self.rounds]

    @property
    def final_fidelity(self) -> float:
        return self.rounds[-1][0] if self.rounds else self.f0

    @property
    def peak_fidelity(self) -> float:
        return max(self.fidelities)


def prep_unitaries(s: SpectralState) -> tuple[np.ndarray, np.ndarray]:
    """Local unitaries mapping a state of the spectral form onto
    ``F |Phi+><Phi+| + (1-F) |Psi+><Psi+|``.

    Both map ``|a>, |a'>`` (``|b>, |b'>``) to ``|+>, |->``; Bob's ``|b'>``
    picks up ``e^{-i theta}`` so the coherent superposition becomes ``|Phi+>``.
    """
    plus = np.array([1.0, 1.0]) * SQRT_HALF
    minus = np.array([1.0, -1.0]) * SQRT_HALF
    bra0 = np.array([1.0, 0.0])
    bra1 = np.array([0.0, 1.0])
    u_a = np.outer(plus, bra0) + np.outer(minus, bra1)
    u_b = np.outer(plus, bra0) + cmath.exp(-1j * s.theta) * np.outer(minus, bra1)
    return u_a.astype(np.complex128), u_b.astype(np.complex128)


def prepare(rho, s: SpectralState | None = None, backend=None) -> np.ndarray:
    """Apply the preparation unitaries; ``s`` defaults to ``spectral_form(rho)``."""
    if s is None:
        s = spectral_form(rho)
    u_a, u_b = prep_unitaries(s)
    return kernels.local_unitary(u_a, u_b, rho, backend=backend)


def bilateral_cnot(rho_joint) -> np.ndarray:
    """Both nodes apply CNOT from their pair-1 qubit onto their pair-2 qubit."""
    rho_joint = np.asarray(rho_joint, dtype=np.complex128)
    if rho_joint.shape != (16, 16):
        raise ValueError(f"expected a 16x16 joint state, got {rho_joint.shape}")
    u = kernels.BILATERAL_CNOT
    return u @ rho_joint @ u.conj().T


def distill_round_circuit(rho, backend=None) -> RoundResult:
    """One round on two copies of ``rho``, keeping pair 1 when the targets agree."""
    rho = np.asarray(rho, dtype=np.complex128)
    check = linalg.is_density(rho, 1e-9)
    if not check:
        raise ValueError(f"input is not a density matrix ({', '.join(check.failures)})")
    out = kernels.pair_branches(rho, backend=backend)
    b00, b11 = out[0, 0], out[1, 1]
    kept = b00 + b11
    p = float(np.real(np.trace(kept)))
    if p <= 0.0:
        raise ZeroSuccessProbability("both agreeing branches have zero weight")
    rho_next = kept / p
    return RoundResult(fidelity_phi_plus(rho_next), p, rho_next, (b00, b11))


def distill_round_analytic(f: float) -> tuple[float, float]:
    """Closed-form fidelity and success probability of one proposed round."""
    p = f * f + (1.0 - f) ** 2
    return f * f / p, p


def bbpssw_round(f: float) -> tuple[float, float]:
    """BBPSSW recurrence for Werner input; ``p`` is the branch normaliser."""
    g = 1.0 - f
    num = f * f + g * g / 9.0
    den = f * f + 2.0 * f * g / 3.0 + 5.0 * g * g / 9.0
    return num / den, den


ROUND_MAPS = {
    Protocol.PROPOSED: distill_round_analytic,
    Protocol.BBPSSW: bbpssw_round,
}


def _reached(f: float, target: float) -> bool:
    return f >= target


def run_protocol(start, target_eps: float = 0.01, kind: Protocol | str = Protocol.PROPOSED,
                 max_rounds: int = 64, keep_states: bool = False, backend=None) -> DistillTrace:
    """Iterate rounds until ``F_k >= 1 - target_eps`` or ``max_rounds``.

    ``start`` is either an initial fidelity (scalar recurrences) or a 4x4
    state of the spectral form. A matrix start with the proposed protocol
    is prepared with the local unitaries and then run through the circuit;
    for BBPSSW only its prepared fidelity seeds the scalar recurrence.
    """
    kind = Protocol(kind)
    if not 0.0 < target_eps < 0.5:
        raise ValueError("target_eps must lie in (0, 1/2)")
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    target = 1.0 - target_eps

    if np.ndim(start) == 0:
        return _run_scalar(float(start), target, kind, max_rounds)

    rho = prepare(start, backend=backend)
    f0 = fidelity_phi_plus(rho)
    if kind is Protocol.BBPSSW:
        return _run_scalar(f0, target, kind, max_rounds)
    trace = DistillTrace(f0, protocol=kind)
    if keep_states:
        trace.states.append(rho)
    f = f0
    while not _reached(f, target) and trace.k_final < max_rounds:
        res = distill_round_circuit(rho, backend=backend)
        rho, f = res.rho_next, res.f_next
        trace.rounds.append((f, res.p_success))
        if keep_states:
            trace.states.append(rho)
    trace.reached_target = _reached(f, target)
    return trace


def _run_scalar(f0: float, target: float, kind: Protocol, max_rounds: int) -> DistillTrace:
    step = ROUND_MAPS[kind]
    trace = DistillTrace(f0, protocol=kind)
    f = f0
    while not _reached(f, target) and trace.k_final < max_rounds:
        f, p = step(f)
        trace.rounds.append((f, p))
    trace.reached_target = _reached(f, target)
    return trace


def distill_misaligned(rho0, target_f: float = 0.99, max_rounds: int = 30,
                       min_gain: float = 1e-6, backend=None) -> DistillTrace:
    """Run the proposed protocol on a state that may not be PSP-aligned.

    The preparation unitaries assume perfect alignment, i.e. they use only
    the phase of ``rho0[3, 0]``. Rounds are applied to the full density
    matrix. Iteration stops at ``target_f``, after ``max_rounds``, or when a
    round improves the fidelity by less than ``min_gain``; such a final
    round is not recorded, so the trace ends at its peak.
    """
    rho0 = np.asarray(rho0, dtype=np.complex128)
    theta = cmath.phase(rho0[3, 0]) if abs(rho0[3, 0]) > 0 else 0.0
    rho = prepare(rho0, SpectralState(0.5, theta), backend=backend)
    f = fidelity_phi_plus(rho)
    trace = DistillTrace(f, protocol=Protocol.PROPOSED)
    while f < target_f and trace.k_final < max_rounds:
        out = kernels.pair_branches(rho, backend=backend)
        kept = out[0, 0] + out[1, 1]
        p = float(np.real(np.trace(kept)))
        if p < PROBABILITY_FLOOR:
            trace.note = f"success probability {p:.3e} below {PROBABILITY_FLOOR:.0e} at round {trace.k_final + 1}"
            break
        nxt = kept / p
        f_next = fidelity_phi_plus(nxt)
        if f_next - f < min_gain:
            trace.note = f"saturated after {trace.k_final} rounds"
            break
        rho, f = nxt, f_next
        trace.rounds.append((f, p))
    trace.reached_target = f >= target_f
    return trace
