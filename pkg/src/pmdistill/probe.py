"""Randomised falsification of the per-round optimality bounds.

Each sampled protocol applies independent local unitaries to the four qubits
``A1, B1, A2, B2``, then the bilateral CNOT, then keeps pair 1 on agreeing or
on disagreeing target outcomes. Half of the samples use Haar-random
unitaries; the other half compose the preparation unitaries with random
single-qubit Cliffords, which lands on the optimal fidelity often enough to
exercise the probability bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from . import kernels
from .channel import SpectralState, state_from_spectral
from .distill import distill_round_analytic, prep_unitaries
from .linalg import PHI_PLUS

BOUND_TOL = 1e-9


def _clifford_group() -> list[np.ndarray]:
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
    s = np.diag([1.0, 1.0j])
    group = [np.eye(2, dtype=np.complex128)]
    frontier = list(group)

    def key(u):
        # strip the global phase before comparing
        k = np.flatnonzero(np.abs(u.ravel()) > 1e-9)[0]
        v = u * (abs(u.flat[k]) / u.flat[k])
        return tuple(np.round(v.ravel(), 8))

    seen = {key(group[0])}
    while frontier:
        nxt = []
        for u, g in itertools.product(frontier, (h, s)):
            w = g @ u
            kw = key(w)
            if kw not in seen:
                seen.add(kw)
                group.append(w)
                nxt.append(w)
        frontier = nxt
    return group


CLIFFORDS = _clifford_group()


@dataclass(frozen=True)
class ProbeReport:
    samples: int
    f_star: float
    p_star: float
    max_fidelity: float
    n_at_optimum: int
    max_probability_at_optimum: float | None

    @property
    def fidelity_ok(self) -> bool:
        return self.max_fidelity <= self.f_star + BOUND_TOL

    @property
    def probability_ok(self) -> bool:
        m = self.max_probability_at_optimum
        return m is None or m <= self.p_star + BOUND_TOL

    @property
    def ok(self) -> bool:
        return self.fidelity_ok and self.probability_ok


def _sample_unitaries(rng, s: SpectralState, structured: bool) -> list[np.ndarray]:
    if not structured:
        return [unitary_group.rvs(2, random_state=rng) for _ in range(4)]
    u_a, u_b = prep_unitaries(s)
    picks = rng.integers(len(CLIFFORDS), size=4)
    return [CLIFFORDS[picks[0]] @ u_a, CLIFFORDS[picks[1]] @ u_b,
            CLIFFORDS[picks[2]] @ u_a, CLIFFORDS[picks[3]] @ u_b]


def random_protocol_probe(s: SpectralState, samples: int = 1000, seed: int = 0,
                          backend=None) -> ProbeReport:
    if samples < 1:
        raise ValueError("samples must be positive")
    rho = state_from_spectral(s)
    f_star, p_star = distill_round_analytic(s.fidelity_f)
    rng = np.random.default_rng(seed)
    best_f = 0.0
    at_opt = 0
    best_p_at_opt = None
    for i in range(samples):
        ua1, ub1, ua2, ub2 = _sample_unitaries(rng, s, structured=bool(i % 2))
        r1 = kernels.local_unitary(ua1, ub1, rho, backend=backend)
        r2 = kernels.local_unitary(ua2, ub2, rho, backend=backend)
        out = kernels.pair_branches(r1, r2, backend=backend)
        for kept in (out[0, 0] + out[1, 1], out[0, 1] + out[1, 0]):
            p = float(np.real(np.trace(kept)))
            if p < 1e-12:
                continue
            f = float(np.real(PHI_PLUS.conj() @ kept @ PHI_PLUS)) / p
            best_f = max(best_f, f)
            if abs(f - f_star) <= BOUND_TOL:
                at_opt += 1
                best_p_at_opt = p if best_p_at_opt is None else max(best_p_at_opt, p)
    return ProbeReport(samples, f_star, p_star, best_f, at_opt, best_p_at_opt)
