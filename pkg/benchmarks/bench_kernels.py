"""Compare the numba and numpy backends on the hot paths.

    python benchmarks/bench_kernels.py [--repeat N]

Each workload runs once to warm up (JIT compile or cache load), then the
best of ``--repeat`` timings is reported. Outputs of the two backends are
checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from pmdistill import channel, distill, kernels
from pmdistill._accel import HAVE_NUMBA
from pmdistill.channel import AlignmentSpec, FiberSpec, SourceSpec, SpectralState
from pmdistill.probe import random_protocol_probe


def _states(n=200, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        out.append(rho / np.trace(rho).real)
    return out


def work_branches(backend, states):
    for rho in states:
        kernels.pair_branches(rho, backend=backend)


def work_probe(backend, _):
    random_protocol_probe(SpectralState(0.75), samples=300, seed=0, backend=backend)


def work_misaligned(backend, _):
    src = SourceSpec(bp=0.1)
    for tau in (0.2, 0.5, 1.0):
        for theta in np.linspace(0.0, 30.0, 61):
            rho0 = channel.generic_density(src, FiberSpec(tau, tau), AlignmentSpec.from_angle(theta))
            distill.distill_misaligned(rho0, 0.99, backend=backend)


WORKLOADS = [
    ("pair_branches x200", work_branches),
    ("probe, 300 samples", work_probe),
    ("misaligned sweep, 183 runs", work_misaligned),
]


def best_of(fn, backend, data, repeat):
    fn(backend, data)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(backend, data)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not installed; timing the numpy backend only")
    data = _states()
    a = kernels.pair_branches(data[0], backend="numpy")
    if HAVE_NUMBA:
        b = kernels.pair_branches(data[0], backend="numba")
        print(f"backend agreement: max |diff| = {np.max(np.abs(a - b)):.1e}")
    print(f"{'workload':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if HAVE_NUMBA else ""))
    for name, fn in WORKLOADS:
        ts = [best_of(fn, b, data, args.repeat) for b in backends]
        line = f"{name:<30}" + "".join(f"{t * 1e3:>10.2f}ms" for t in ts)
        if HAVE_NUMBA:
            line += f"{ts[0] / ts[1]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
