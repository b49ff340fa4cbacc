"""Batch front end: figure data, single-point round tables, sweeps, verification.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure in a sweep row.
"""
from __future__ import annotations

import argparse
import io
import sys

from . import __version__
from .channel import AlignmentSpec, generic_density, aligned_density
from .config import ConfigError, RunConfig, load_config
from .distill import DistillationError, Protocol, distill_misaligned, run_protocol
from .yields import SweepSpec, figure_spec, sweep, upper_bound_yield, yield_of

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

YIELD_COLUMNS = ["f0", "k_proposed", "yield_proposed", "k_bbpssw", "yield_bbpssw", "yield_upper",
                 "f_final_proposed", "f_final_bbpssw"]
SERIES_NAMES = {"tau_b": "tau_b", "tau": "tau", "bp": "bp"}


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, int)) and not isinstance(x, float):
        return str(int(x))
    return format(float(x), ".12g")


def columns_for(spec: SweepSpec) -> list[str]:
    series = [SERIES_NAMES[spec.series]] if spec.series else []
    if spec.parameter == "theta_deg":
        return ["theta_deg"] + series + ["peak_fidelity", "yield", "f0", "k_proposed"]
    return [spec.parameter] + series + YIELD_COLUMNS


def row_values(spec: SweepSpec, row) -> list:
    vals = [row.value] + ([row.series_value] if spec.series else [])
    if spec.parameter == "theta_deg":
        return vals + [row.peak_fidelity, row.yield_proposed, row.f0, row.k_proposed]
    return vals + [row.f0, row.k_proposed, row.yield_proposed, row.k_bbpssw, row.yield_bbpssw,
                   row.yield_upper, row.f_final_proposed, row.f_final_bbpssw]


def spec_header(spec: SweepSpec) -> list[str]:
    s, f = spec.source, spec.fiber
    lines = [
        f"source.bp={fmt(s.bp)} source.ba={fmt(s.ba)} source.bb={fmt(s.bb)} "
        f"source.delta_omega={fmt(s.delta_omega)} source.alpha={fmt(s.alpha)}",
        f"fiber.tau_a={fmt(f.tau_a)} fiber.tau_b={fmt(f.tau_b)} alignment.theta_deg={fmt(spec.theta_deg)}",
        f"distill.target_fidelity={fmt(spec.target_fidelity)} distill.max_rounds={spec.max_rounds} "
        f"protocols={'+'.join(spec.protocols)}",
        f"sweep.parameter={spec.parameter} sweep.min={fmt(spec.start)} sweep.max={fmt(spec.stop)} "
        f"sweep.steps={spec.steps}",
    ]
    if spec.series:
        lines.append(f"sweep.series={spec.series} sweep.series_values="
                     + ",".join(fmt(v) for v in spec.series_values))
    return lines


def render_csv(spec: SweepSpec, rows, title: str, seed: int = 0) -> tuple[str, list[str]]:
    buf = io.StringIO()
    buf.write(f"# pmdistill {__version__}\n# {title}\n")
    for line in spec_header(spec):
        buf.write(f"# {line}\n")
    buf.write(f"# seed={seed}\n")
    errors = []
    for r in rows:
        if r.error:
            buf.write(f"# row {fmt(r.value)}: {r.error}\n")
            errors.append(r.error)
    buf.write(",".join(columns_for(spec)) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in row_values(spec, r)) + "\n")
    return buf.getvalue(), errors


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def _emit_sweep(spec, title, out, seed, threads) -> int:
    rows = sweep(spec, threads)
    text, errors = render_csv(spec, rows, title, seed)
    try:
        _write(out, text)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if errors:
        print(f"error: {len(errors)} row(s) failed numerically; first: {errors[0]}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_figure(fig_id: int, out: str, threads: int | None = None) -> int:
    try:
        spec = figure_spec(fig_id)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _emit_sweep(spec, f"figure={fig_id}", out, 0, threads)


def cmd_sweep(cfg: RunConfig, out: str | None, threads: int | None = None) -> int:
    out = out or cfg.output.path
    if not out:
        print("error: no output path (use --out or [output] path)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = cfg.sweep_spec()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _emit_sweep(spec, "sweep", out, cfg.seed, threads)


def point_table(cfg: RunConfig, protocol: str | None = None) -> str:
    """Round table for one configuration, as ``#``-commented CSV."""
    kind = Protocol(protocol or cfg.distill.protocol)
    target = cfg.distill.target_fidelity
    eps = 1.0 - target
    theta = cfg.alignment.theta_deg
    src, fiber = cfg.source_spec(), cfg.fiber_spec()
    if cfg.distill.f0 is not None:
        trace = run_protocol(cfg.distill.f0, eps, kind, cfg.distill.max_rounds)
    elif theta != 0.0 and kind is Protocol.PROPOSED:
        rho0 = generic_density(src, fiber, AlignmentSpec.from_angle(theta))
        trace = distill_misaligned(rho0, target, min(cfg.distill.max_rounds, 30))
    elif theta != 0.0:
        rho0 = generic_density(src, fiber, AlignmentSpec.from_angle(theta))
        f0 = distill_misaligned(rho0, target, 1).f0
        trace = run_protocol(f0, eps, kind, cfg.distill.max_rounds)
    else:
        trace = run_protocol(aligned_density(src, fiber), eps, kind, cfg.distill.max_rounds)

    buf = io.StringIO()
    buf.write(f"# pmdistill {__version__}\n# point protocol={kind.value}\n")
    for key, val in cfg.flat_items():
        if key.startswith(("sweep.", "output.")):
            continue
        buf.write(f"# {key}={fmt(val) if isinstance(val, float) else val}\n")
    buf.write(f"# f0={fmt(trace.f0)}\n")
    bound = upper_bound_yield(trace.f0) if trace.f0 >= 0.5 else None
    buf.write(f"# upper_bound={fmt(bound)}\n")
    buf.write(f"# reached_target={str(trace.reached_target).lower()}\n")
    if trace.note:
        buf.write(f"# note: {trace.note}\n")
    buf.write("k,f_k,p_k,yield\n")
    y = 1.0
    for k, (f, p) in enumerate(trace.rounds, start=1):
        y *= p / 2.0
        buf.write(f"{k},{fmt(f)},{fmt(p)},{fmt(y)}\n")
    assert abs(y - yield_of(trace).yield_value) <= 1e-12
    return buf.getvalue()


def cmd_point(cfg: RunConfig, protocol: str | None = None) -> int:
    try:
        text = point_table(cfg, protocol)
    except DistillationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(text)
    return EXIT_OK


def verify_report(seed: int = 0) -> tuple[str, bool]:
    from .verify import run_all

    results = run_all(seed)
    lines = [f"pmdistill {__version__} verify seed={seed}"]
    lines += [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} suites passed")
    return "\n".join(lines) + "\n", ok


def cmd_verify(seed: int = 0) -> int:
    text, ok = verify_report(seed)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmdistill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pmdistill {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure", help="write the data behind one figure as CSV")
    p.add_argument("--id", type=int, required=True, choices=(2, 3, 4, 5), dest="fig_id")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("point", help="print the round table for one configuration")
    p.add_argument("--config", default=None)
    p.add_argument("--protocol", choices=[k.value for k in Protocol], default=None)

    p = sub.add_parser("sweep", help="run the sweep described in a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("verify", help="run every invariant suite")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "figure":
        return cmd_figure(args.fig_id, args.out, args.threads)
    if args.command == "verify":
        return cmd_verify(args.seed)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "point":
        return cmd_point(cfg, args.protocol)
    return cmd_sweep(cfg, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
