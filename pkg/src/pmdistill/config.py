"""TOML run configuration.

Every key is optional; defaults reproduce the Fig. 2 operating point
(``bp = 0.1``, ``ba = bb = 1``, ``tau_a = 1``, ``tau_b = 0.5``, target 0.99).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import FiberSpec, SourceSpec
from .distill import Protocol
from .yields import SweepSpec


class ConfigError(ValueError):
    pass


@dataclass
class SourceSection:
    bp: float = 0.1
    ba: float = 1.0
    bb: float = 1.0
    delta_omega: float = 0.0
    alpha: float = 0.0


@dataclass
class FiberSection:
    tau_a: float = 1.0
    tau_b: float = 0.5


@dataclass
class AlignmentSection:
    theta_deg: float = 0.0


@dataclass
class DistillSection:
    target_fidelity: float = 0.99
    max_rounds: int = 64
    protocol: str = "proposed"
    f0: float | None = None


@dataclass
class SweepSection:
    parameter: str = "tau_ratio"
    min: float = 0.0
    max: float = 3.0
    steps: int = 121
    series: str | None = None
    series_values: list[float] = field(default_factory=list)


@dataclass
class OutputSection:
    path: str | None = None


@dataclass
class RunConfig:
    source: SourceSection = field(default_factory=SourceSection)
    fiber: FiberSection = field(default_factory=FiberSection)
    alignment: AlignmentSection = field(default_factory=AlignmentSection)
    distill: DistillSection = field(default_factory=DistillSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)
    seed: int = 0

    def validate(self) -> "RunConfig":
        d = self.distill
        if not 0.5 < d.target_fidelity < 1.0:
            raise ConfigError(f"distill.target_fidelity must lie in (0.5, 1), got {d.target_fidelity}")
        if not 1 <= d.max_rounds <= 64:
            raise ConfigError(f"distill.max_rounds must lie in [1, 64], got {d.max_rounds}")
        try:
            Protocol(d.protocol)
        except ValueError:
            raise ConfigError(f"distill.protocol must be 'proposed' or 'bbpssw', got {d.protocol!r}") from None
        if d.f0 is not None and not 0.0 <= d.f0 <= 1.0:
            raise ConfigError(f"distill.f0 must lie in [0, 1], got {d.f0}")
        try:
            self.source_spec()
            self.fiber_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def source_spec(self) -> SourceSpec:
        s = self.source
        return SourceSpec(s.bp, s.ba, s.bb, s.delta_omega, s.alpha)

    def fiber_spec(self) -> FiberSpec:
        return FiberSpec(self.fiber.tau_a, self.fiber.tau_b)

    def sweep_spec(self) -> SweepSpec:
        sw = self.sweep
        try:
            return SweepSpec(
                sw.parameter, sw.min, sw.max, sw.steps, self.source_spec(), self.fiber_spec(),
                self.alignment.theta_deg, self.distill.target_fidelity, self.distill.max_rounds,
                series=sw.series, series_values=tuple(sw.series_values),
                protocols=("proposed",) if sw.parameter == "theta_deg" else ("proposed", "bbpssw"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def flat_items(self) -> list[tuple[str, object]]:
        """``section.key`` pairs in declaration order, for output headers."""
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if hasattr(val, "__dataclass_fields__"):
                for g in fields(val):
                    out.append((f"{f.name}.{g.name}", getattr(val, g.name)))
            else:
                out.append((f.name, val))
        return out


_SECTIONS = {
    "source": SourceSection, "fiber": FiberSection, "alignment": AlignmentSection,
    "distill": DistillSection, "sweep": SweepSection, "output": OutputSection,
}
_INT_KEYS = {("distill", "max_rounds"), ("sweep", "steps")}
_STR_KEYS = {("distill", "protocol"), ("sweep", "parameter"), ("sweep", "series"), ("output", "path")}


def _coerce(section: str, key: str, value):
    if (section, key) in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a string")
        return value
    if (section, key) in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{key} must be an integer")
        return value
    if section == "sweep" and key == "series_values":
        if not isinstance(value, list):
            raise ConfigError("sweep.series_values must be an array")
        return [_coerce("source", "bp", v) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number")
    return float(value)


def config_from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    for name, body in data.items():
        if name == "seed":
            if isinstance(body, bool) or not isinstance(body, int):
                raise ConfigError("seed must be an integer")
            cfg.seed = body
            continue
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{name}] must be a table")
        section = getattr(cfg, name)
        known = {f.name for f in fields(section)}
        for key, value in body.items():
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}")
            setattr(section, key, _coerce(name, key, value))
    return cfg.validate()


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return config_from_dict(data)
