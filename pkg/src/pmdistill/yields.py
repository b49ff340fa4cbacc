"""Yields, the distillable-entanglement bound, and figure sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import AlignmentSpec, FiberSpec, SourceSpec, aligned_density, generic_density
from .distill import DistillTrace, Protocol, distill_misaligned, run_protocol

THREADS_ENV = "PMDISTILL_THREADS"
SWEEP_PARAMETERS = ("tau_ratio", "bp", "theta_deg")
SERIES_PARAMETERS = ("tau_b", "tau", "bp")


@dataclass(frozen=True)
class YieldRecord:
    k_rounds: int
    per_round_p: tuple[float, ...]
    yield_value: float


def yield_of(trace: DistillTrace) -> YieldRecord:
    ps = tuple(p for _, p in trace.rounds)
    return YieldRecord(len(ps), ps, math.prod(p / 2.0 for p in ps))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def upper_bound_yield(f0: float) -> float:
    """``1 - H2(f0)``, the distillable-entanglement bound for a rank-2 Bell-diagonal state."""
    if not 0.5 - 1e-12 <= f0 <= 1.0 + 1e-12:
        raise ValueError(f"f0 must lie in [1/2, 1], got {f0}")
    return 1.0 - binary_entropy(min(max(f0, 0.5), 1.0))


def target_yield_bound(f0: float, target_fidelity: float) -> float:
    """Bound on the yield of pairs at ``target_fidelity``.

    Pairs already at target need no distillation, so the bound is 1 there;
    below target it is :func:`upper_bound_yield`.
    """
    return 1.0 if f0 >= target_fidelity else upper_bound_yield(f0)


@dataclass(frozen=True)
class SweepSpec:
    """Grid over one channel parameter, optionally repeated for a series of a second one.

    ``tau_ratio`` scales ``tau_b = ratio * tau_a``; ``theta_deg`` routes each
    point through the misaligned circuit run. The series parameter ``tau``
    sets ``tau_a = tau_b``.
    """

    parameter: str = "tau_ratio"
    start: float = 0.0
    stop: float = 3.0
    steps: int = 121
    source: SourceSpec = SourceSpec()
    fiber: FiberSpec = FiberSpec()
    theta_deg: float = 0.0
    target_fidelity: float = 0.99
    max_rounds: int = 64
    protocols: tuple[str, ...] = ("proposed", "bbpssw")
    series: str | None = None
    series_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        if not self.start < self.stop:
            raise ValueError("sweep range needs start < stop")
        if not 0.5 < self.target_fidelity < 1.0:
            raise ValueError("target_fidelity must lie in (1/2, 1)")
        if self.series is not None and self.series not in SERIES_PARAMETERS:
            raise ValueError(f"unknown series parameter {self.series!r}")
        for p in self.protocols:
            Protocol(p)

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)

    def points(self) -> list[tuple[float | None, float]]:
        series = self.series_values if self.series else (None,)
        return [(s, float(v)) for s in series for v in self.grid()]


@dataclass
class SweepRow:
    value: float
    series_value: float | None
    f0: float
    k_proposed: int | None = None
    yield_proposed: float | None = None
    k_bbpssw: int | None = None
    yield_bbpssw: float | None = None
    yield_upper: float | None = None
    peak_fidelity: float | None = None
    f_final_proposed: float | None = None
    f_final_bbpssw: float | None = None
    p_proposed: tuple[float, ...] = field(default=(), repr=False)
    error: str = ""


def _point_channel(spec: SweepSpec, series_value, value):
    src, fiber, theta = spec.source, spec.fiber, spec.theta_deg
    if spec.series == "tau_b":
        fiber = replace(fiber, tau_b=series_value)
    elif spec.series == "tau":
        fiber = FiberSpec(series_value, series_value)
    elif spec.series == "bp":
        src = replace(src, bp=series_value)
    if spec.parameter == "tau_ratio":
        fiber = replace(fiber, tau_b=value * fiber.tau_a)
    elif spec.parameter == "bp":
        src = replace(src, bp=value)
    else:
        theta = value
    return src, fiber, theta


def _outcome(trace: DistillTrace):
    """``(k, yield)``; a run that never reached target yields nothing."""
    if not trace.reached_target:
        return None, 0.0
    return trace.k_final, yield_of(trace).yield_value


def sweep_point(spec: SweepSpec, series_value, value) -> SweepRow:
    eps = 1.0 - spec.target_fidelity
    try:
        src, fiber, theta = _point_channel(spec, series_value, value)
        if spec.parameter == "theta_deg":
            rho0 = generic_density(src, fiber, AlignmentSpec.from_angle(theta))
            tr = distill_misaligned(rho0, spec.target_fidelity, min(spec.max_rounds, 30))
            row = SweepRow(value, series_value, tr.f0, peak_fidelity=tr.peak_fidelity,
                           f_final_proposed=tr.final_fidelity)
            row.k_proposed = tr.k_final
            row.yield_proposed = yield_of(tr).yield_value
            row.p_proposed = tuple(p for _, p in tr.rounds)
            row.error = tr.note if tr.note.startswith("success probability") else ""
            return row

        rho0 = aligned_density(src, fiber)
        row = None
        for name in spec.protocols:
            tr = run_protocol(rho0, eps, name, spec.max_rounds)
            if row is None:
                row = SweepRow(value, series_value, tr.f0,
                               yield_upper=target_yield_bound(tr.f0, spec.target_fidelity))
            k, y = _outcome(tr)
            if name == Protocol.PROPOSED.value:
                row.k_proposed, row.yield_proposed = k, y
                row.f_final_proposed = tr.final_fidelity
                row.p_proposed = tuple(p for _, p in tr.rounds)
            else:
                row.k_bbpssw, row.yield_bbpssw = k, y
                row.f_final_bbpssw = tr.final_fidelity
        return row
    except Exception as exc:  # recorded per row; the sweep carries on
        return SweepRow(value, series_value, float("nan"), error=f"{type(exc).__name__}: {exc}")


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def sweep(spec: SweepSpec, threads: int | None = None) -> list[SweepRow]:
    """Evaluate every grid point; rows come back in grid order."""
    pts = spec.points()
    n = thread_count(threads)
    if n == 1:
        return [sweep_point(spec, s, v) for s, v in pts]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda sv: sweep_point(spec, *sv), pts))


def figure_spec(fig_id: int) -> SweepSpec:
    """Parameter grids behind the four yield/robustness figures."""
    if fig_id == 2:
        return SweepSpec("tau_ratio", 0.0, 3.0, 121, SourceSpec(bp=0.1), FiberSpec(1.0, 0.5))
    if fig_id == 3:
        return SweepSpec("tau_ratio", 0.0, 3.0, 121, SourceSpec(bp=1.0), FiberSpec(1.0, 0.5))
    if fig_id == 4:
        return SweepSpec("bp", 0.05, 2.0, 40, SourceSpec(), FiberSpec(1.0, 0.5),
                         series="tau_b",
                         series_values=(0.1, 0.5, 0.9, 1.3))
    if fig_id == 5:
        return SweepSpec("theta_deg", 0.0, 30.0, 61, SourceSpec(bp=0.1), FiberSpec(1.0, 1.0),
                         protocols=("proposed",), series="tau", series_values=(0.2, 0.5, 1.0))
    raise ValueError(f"no figure {fig_id}; expected 2, 3, 4 or 5")
