"""Invariant suites run by ``pmdistill verify``.

Each suite returns ``(passed, detail)``. Details use fixed formatting so a
given seed always produces the same report.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import unitary_group

from . import channel, distill, linalg, probe, yields
from ._accel import HAVE_NUMBA


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def random_density(rng, n, rank=None):
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_channel(rng):
    src = channel.SourceSpec(
        bp=float(np.exp(rng.uniform(np.log(0.01), np.log(3.0)))),
        ba=float(rng.uniform(0.2, 3.0)),
        bb=float(rng.uniform(0.2, 3.0)),
        delta_omega=float(rng.uniform(-2.0, 2.0)),
        alpha=float(rng.uniform(0.0, 2 * np.pi)),
    )
    fiber = channel.FiberSpec(float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)))
    eta = rng.normal(size=2) + 1j * rng.normal(size=2)
    eta /= np.linalg.norm(eta)
    return src, fiber, channel.AlignmentSpec(eta[0], eta[1], None)


def suite_linalg(rng):
    worst = {}
    for _ in range(100):
        a, b, c = (random_hermitian(rng, 2) for _ in range(3))
        worst["kron-trace"] = max(worst.get("kron-trace", 0.0),
                                  abs(linalg.trace(linalg.kron(a, b)) - linalg.trace(a) * linalg.trace(b)))
        worst["kron-assoc"] = max(worst.get("kron-assoc", 0.0), float(np.max(np.abs(
            linalg.kron(linalg.kron(a, b), c) - linalg.kron(a, linalg.kron(b, c))))))
        ra, rb = random_density(rng, 4), random_hermitian(rng, 4)
        pt = linalg.partial_trace(linalg.kron(ra, rb), linalg.PAIR_MAJOR, ("A2", "B2"))
        worst["ptrace-kron"] = max(worst.get("ptrace-kron", 0.0),
                                   float(np.max(np.abs(pt - ra * np.trace(rb)))))
        r16 = random_density(rng, 16)
        worst["ptrace-trace"] = max(worst.get("ptrace-trace", 0.0), abs(
            linalg.trace(linalg.partial_trace(r16, linalg.PAIR_MAJOR, ("B1", "A2"))) - 1.0))
        h = random_hermitian(rng, 4)
        w, v = linalg.hermitian_eig(h)
        worst["eig-recon"] = max(worst.get("eig-recon", 0.0),
                                 float(np.max(np.abs(v @ np.diag(w) @ v.conj().T - h))))
        w, _ = linalg.hermitian_eig(ra)
        worst["eig-range"] = max(worst.get("eig-range", 0.0), max(0.0, -w[-1], w[0] - 1.0),
                                 abs(w.sum() - 1.0))
        u = unitary_group.rvs(4, random_state=rng)
        if not linalg.is_density(u @ ra @ u.conj().T):
            worst["unitary-density"] = 1.0
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        uu, s, vv = linalg.svd_2x2(m)
        worst["svd-recon"] = max(worst.get("svd-recon", 0.0),
                                 float(np.max(np.abs(uu @ np.diag(s) @ vv - m))))
    limits = {"kron-trace": 1e-12, "kron-assoc": 1e-13, "ptrace-kron": 1e-12, "ptrace-trace": 1e-12,
              "eig-recon": 1e-12, "eig-range": 1e-10, "unitary-density": 0.0, "svd-recon": 1e-13}
    ok = all(worst.get(k, 0.0) <= lim for k, lim in limits.items())
    return ok, "max errors " + " ".join(f"{k}={worst.get(k, 0.0):.1e}" for k in limits)


def suite_overlap(rng):
    worst = 0.0
    grid = np.linspace(-2.0, 2.0, 5)
    for bp in (0.1, 1.0):
        for dw in (0.0, 1.0):
            src = channel.SourceSpec(bp=bp, delta_omega=dw)
            for ta in grid:
                for tb in grid:
                    fb = channel.FiberSpec(float(ta), float(tb))
                    closed = channel.overlap_closed(src, fb)
                    quad = channel.overlap_quadrature(src, fb)
                    worst = max(worst, abs(quad - closed) / abs(closed))
    return worst <= 1e-6, f"max relative error {worst:.2e} over 100 grid points"


def suite_density(rng):
    bad = 0
    worst_tr = 0.0
    for _ in range(500):
        src, fb, al = random_channel(rng)
        rho = channel.generic_density(src, fb, al)
        if not linalg.is_density(rho, 1e-9):
            bad += 1
        worst_tr = max(worst_tr, abs(np.trace(rho) - 1.0))
    return bad == 0 and worst_tr <= 1e-12, f"{bad} of 500 draws invalid, max trace error {worst_tr:.1e}"


def suite_alignment(rng):
    worst = 0.0
    for _ in range(100):
        alpha = rng.uniform(0, 2 * np.pi)
        m = np.array([[1.0, 0.0], [0.0, np.exp(1j * alpha)]]) / np.sqrt(2.0)
        s_a = unitary_group.rvs(2, random_state=rng)
        s_b = unitary_group.rvs(2, random_state=rng)
        coeffs = s_a.conj().T @ m @ s_b.conj()
        w = channel.psp_align(coeffs)
        aligned = w @ coeffs
        worst = max(worst, abs(abs(aligned[0, 0]) * np.sqrt(2.0) - 1.0),
                    abs(aligned[0, 1]) * np.sqrt(2.0), abs(aligned[1, 0]) * np.sqrt(2.0))
    return worst <= 1e-10, f"max |eta1|-1, |eta2| deviation {worst:.1e}"


def suite_spectral(rng):
    worst = 0.0
    for f in np.linspace(0.5, 1.0, 21):
        theta = float(rng.uniform(0, 2 * np.pi))
        s = channel.spectral_form(channel.state_from_spectral(channel.SpectralState(float(f), theta)))
        dth = abs((s.theta - theta + np.pi) % (2 * np.pi) - np.pi) if f > 0.5 else 0.0
        worst = max(worst, abs(s.fidelity_f - f), dth)
    src = channel.SourceSpec(bp=1e-6)
    cw = min(abs(channel.overlap_closed(src, channel.FiberSpec(t, t))) for t in np.linspace(0, 2, 21))
    ok = worst <= 1e-12 and cw >= 1 - 1e-6
    return ok, f"round-trip error {worst:.1e}, CW-limit min |R| {cw:.9f}"


def suite_circuit(rng):
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    worst = 0.0
    for backend in backends:
        for f in np.linspace(0.5, 0.999, 50):
            res = distill.distill_round_circuit(distill.bell_diagonal(float(f)), backend=backend)
            f_ref, p_ref = distill.distill_round_analytic(float(f))
            worst = max(worst, abs(res.f_next - f_ref), abs(res.p_success - p_ref),
                        float(np.max(np.abs(res.rho_next - distill.bell_diagonal(f_ref)))))
    return worst <= 1e-12, f"max deviation {worst:.1e} ({'+'.join(backends)})"


def suite_closure(rng):
    worst_off = worst_branch = 0.0
    for f in np.linspace(0.5, 0.999, 50):
        res = distill.distill_round_circuit(distill.bell_diagonal(float(f)))
        fit = distill.bell_diagonal(min(max(res.f_next, 0.0), 1.0))
        worst_off = max(worst_off, float(np.max(np.abs(res.rho_next - fit))))
        worst_branch = max(worst_branch, float(np.max(np.abs(res.branches[0] - res.branches[1]))))
    ok = worst_off <= 1e-12 and worst_branch <= 1e-13
    return ok, f"off-form {worst_off:.1e}, branch mismatch {worst_branch:.1e}"


def suite_monotone(rng):
    ok = True
    for f in np.linspace(0.51, 0.999, 50):
        ok &= distill.distill_round_analytic(float(f))[0] > f
    for f in (0.5, 1.0):
        ok &= abs(distill.distill_round_analytic(f)[0] - f) <= 1e-15
    return bool(ok), "F > 1/2 strictly improves; 1/2 and 1 fixed"


def suite_rates(rng):
    f = 0.75
    for _ in range(20):
        f_new, _ = distill.bbpssw_round(f)
        ratio = (1 - f_new) / (1 - f)
        f = f_new
    lin = abs(ratio - 2.0 / 3.0)
    f = 0.75
    for _ in range(4):
        f_new, _ = distill.distill_round_analytic(f)
        quad = (1 - f_new) / (1 - f) ** 2
        f = f_new
    q = abs(quad - 1.0)
    return lin <= 1e-3 and q <= 5e-3, f"linear-rate error {lin:.2e}, quadratic-rate error {q:.2e}"


def suite_probes(seed):
    def run(rng):
        parts, ok = [], True
        for i, f in enumerate((0.6, 0.75, 0.9)):
            rep = probe.random_protocol_probe(channel.SpectralState(f, 0.3 * i), 1000, seed + i)
            ok &= rep.ok
            parts.append(f"F={f}: max fid {rep.max_fidelity:.6f}/{rep.f_star:.6f}, "
                         f"{rep.n_at_optimum} at optimum")
        return ok, "; ".join(parts)
    return run


def _yield_rows():
    return {fig: yields.sweep(yields.figure_spec(fig), threads=1) for fig in (2, 3, 4)}


def suite_bounds(rng):
    problems = []
    n = at_target = 0
    for fig, rows in _yield_rows().items():
        for r in rows:
            n += 1
            at_target += r.yield_upper == 1.0 and r.f0 < 1.0
            if r.error:
                problems.append(f"fig{fig} row {r.value:.3g}: {r.error}")
                continue
            for y in (r.yield_proposed, r.yield_bbpssw, r.yield_upper):
                if y is not None and not 0.0 <= y <= 1.0:
                    problems.append(f"fig{fig} {r.value:.3g}: yield {y} outside [0, 1]")
            if r.yield_proposed > r.yield_upper + 1e-9:
                problems.append(f"fig{fig} {r.value:.3g}: proposed yield above the bound")
    return not problems, "; ".join(problems[:3]) or (
        f"yields in [0, 1] and below the bound on {n} rows "
        f"({at_target} already at target, bound 1 there; 1 - H2(F0) elsewhere)")


def suite_dominance(rng):
    bad, strict = [], 0
    for fig, rows in _yield_rows().items():
        for r in rows:
            if r.k_bbpssw is None or r.k_proposed is None:
                continue
            if r.k_proposed < r.k_bbpssw:
                strict += 1
            if r.yield_proposed < r.yield_bbpssw:
                bad.append((fig, r))
    if not bad:
        return True, f"proposed yield >= BBPSSW yield on every row ({strict} with fewer rounds)"
    same_k = all(r.k_proposed == r.k_bbpssw for _, r in bad)
    f_lo = min(r.f0 for _, r in bad)
    f_hi = max(r.f0 for _, r in bad)
    return False, (f"BBPSSW yield higher on {len(bad)} rows (F0 in [{f_lo:.4f}, {f_hi:.4f}]"
                   f"{', all with equal round counts' if same_k else ''})")


def suite_dfs(rng):
    fig2 = yields.sweep(yields.figure_spec(2), threads=1)
    dfs = [r.value for r in fig2
           if r.k_proposed == 0 and r.yield_proposed == 1.0 and r.k_bbpssw == 0]
    ok = bool(dfs) and min(dfs) < 1.0 < max(dfs)
    return ok, (f"unit-yield region tau_B/tau_A in [{min(dfs):.3f}, {max(dfs):.3f}]" if dfs
                else "no unit-yield rows")


def suite_pump(rng):
    fig4 = yields.sweep(yields.figure_spec(4), threads=1)
    bad = []
    for tb in (0.1, 0.5, 0.9, 1.3):
        ys = [r.yield_proposed for r in fig4 if r.series_value == tb]
        if any(b > a + 1e-12 for a, b in zip(ys, ys[1:])):
            bad.append(tb)
    return not bad, (f"yield increases with bp at tau_b={bad}" if bad
                     else "proposed yield non-increasing in bp for tau_b in {0.1, 0.5, 0.9, 1.3}")


def suite_misalignment(rng):
    rows = yields.sweep(yields.figure_spec(5), threads=1)
    small = [r for r in rows if r.value <= 5.0 + 1e-12]
    low = min(r.peak_fidelity for r in small)
    big = [r.peak_fidelity for r in rows if r.series_value == 1.0 and abs(r.value - 30.0) < 1e-12]
    ok = low >= 0.99 and big and big[0] < 0.99
    return bool(ok), f"min peak fidelity for theta<=5: {low:.6f}; theta=30, tau=1: {big[0]:.6f}"


def suites(seed: int = 0) -> list[tuple[str, Callable]]:
    return [
        ("linalg.algebra", suite_linalg),
        ("channel.overlap-oracle", suite_overlap),
        ("channel.density-validity", suite_density),
        ("channel.psp-alignment", suite_alignment),
        ("channel.spectral-roundtrip", suite_spectral),
        ("distill.circuit-analytic", suite_circuit),
        ("distill.closure", suite_closure),
        ("distill.monotonicity", suite_monotone),
        ("distill.convergence-rates", suite_rates),
        ("distill.optimality-probes", suite_probes(seed)),
        ("yields.bound-consistency", suite_bounds),
        ("yields.dominance", suite_dominance),
        ("yields.dfs-region", suite_dfs),
        ("yields.pump-monotonicity", suite_pump),
        ("yields.misalignment", suite_misalignment),
    ]


def run_all(seed: int = 0) -> list[SuiteResult]:
    results = []
    for i, (name, fn) in enumerate(suites(seed)):
        rng = np.random.default_rng([seed, i])
        try:
            passed, detail = fn(rng)
        except Exception as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(SuiteResult(name, bool(passed), detail))
    return results
