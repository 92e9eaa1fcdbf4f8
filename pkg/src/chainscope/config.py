"""Run configuration: a TOML file with ``[model]``, ``[schedule]``, ``[analysis]`` and ``[run]`` tables.

Unknown keys are errors. Command-line flags override ``[run]`` fields.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import (
    FiniteModel,
    ModelError,
    ResolutionError,
    ResolutionSchedule,
    build_example31_model,
    build_grid_model,
    build_subshift_model,
    from_matrix,
)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


MODEL_KEYS = {
    "grid": {"kind", "name", "map", "mesh", "params", "node_cap"},
    "subshift": {"kind", "name", "alphabet", "forbidden", "window", "values", "node_cap"},
    "example31": {"kind", "name", "K", "N", "s", "node_cap"},
    "matrix": {"kind", "name", "dist", "image", "proj_error", "mesh"},
}


@dataclass(frozen=True)
class AnalysisConfig:
    scales: tuple = (0.25,)
    n_range: tuple = (1, 12)
    rb_grid: tuple = ((0.25, 0.5),)
    theta: float = 0.02
    exact_cap: int = 24
    chain_cap: int = 5000
    state_cap: int = 500_000
    triple_samples: int = 2000
    certificate_N: int = 4


@dataclass(frozen=True)
class RunSection:
    theorems: tuple = ("all",)
    out: str = "report"
    seed: int = 0
    jobs: int = 0
    sample_pairs: int = 200


@dataclass(frozen=True)
class RunConfig:
    model: dict
    schedule: dict
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    run: RunSection = field(default_factory=RunSection)

    def to_dict(self) -> dict:
        return {"model": self.model, "schedule": self.schedule,
                "analysis": _lists(asdict(self.analysis)), "run": _lists(asdict(self.run))}

    def digest(self) -> str:
        """Hash of the analysis-relevant config; ``[run]`` output paths and job counts excluded."""
        d = self.to_dict()
        d["run"] = {k: v for k, v in d["run"].items() if k not in ("out", "jobs")}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_run(self, **overrides) -> "RunConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, run=replace(self.run, **clean))


def _lists(obj):
    if isinstance(obj, dict):
        return {k: _lists(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_lists(v) for v in obj]
    return obj


def _section(cls, data: dict, name: str):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(extra))}")
    out = {}
    for k, v in data.items():
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        out[k] = v
    return cls(**out)


def parse_config(data: dict) -> RunConfig:
    extra = set(data) - {"model", "schedule", "analysis", "run"}
    if extra:
        raise ConfigError(f"unknown top-level tables: {', '.join(sorted(extra))}")
    if "model" not in data or "schedule" not in data:
        raise ConfigError("config needs [model] and [schedule] tables")
    model = dict(data["model"])
    kind = model.get("kind")
    if kind not in MODEL_KEYS:
        raise ConfigError(f"model kind must be one of {sorted(MODEL_KEYS)}, got {kind!r}")
    extra = set(model) - MODEL_KEYS[kind]
    if extra:
        raise ConfigError(f"unknown keys in [model] for kind {kind}: {', '.join(sorted(extra))}")
    schedule = dict(data["schedule"])
    extra = set(schedule) - {"epsilons", "deltas", "radii"}
    if extra:
        raise ConfigError(f"unknown keys in [schedule]: {', '.join(sorted(extra))}")
    missing = {"epsilons", "deltas", "radii"} - set(schedule)
    if missing:
        raise ConfigError(f"[schedule] is missing {', '.join(sorted(missing))}")
    analysis = _section(AnalysisConfig, data.get("analysis", {}), "analysis")
    run = _section(RunSection, data.get("run", {}), "run")
    if len(analysis.n_range) != 2 or analysis.n_range[0] < 1 or analysis.n_range[1] <= analysis.n_range[0]:
        raise ConfigError("n_range must be [n_min, n_max] with 1 <= n_min < n_max")
    return RunConfig(model, schedule, analysis, run)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    return parse_config(data)


def build_model(spec: dict) -> FiniteModel:
    """Build the model described by a ``[model]`` table."""
    kind = spec.get("kind")
    try:
        if kind == "grid":
            kw = {"node_cap": spec["node_cap"]} if "node_cap" in spec else {}
            m = build_grid_model(spec["map"], float(spec["mesh"]), dict(spec.get("params", {})), **kw)
        elif kind == "subshift":
            kw = {"node_cap": spec["node_cap"]} if "node_cap" in spec else {}
            m = build_subshift_model(list(spec["alphabet"]), list(spec.get("forbidden", [])),
                                     int(spec["window"]), spec.get("values"), **kw)
        elif kind == "example31":
            kw = {"node_cap": spec["node_cap"]} if "node_cap" in spec else {}
            m = build_example31_model(int(spec["K"]), int(spec["N"]), list(spec["s"]), **kw)
        elif kind == "matrix":
            m = from_matrix(spec["dist"], spec["image"], spec.get("name", "matrix"),
                            float(spec.get("proj_error", 0.0)), float(spec.get("mesh", 0.0)))
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"[model] is missing key {exc.args[0]!r}") from exc
    if "name" in spec:
        m.name = spec["name"]
    return m


def resolve_schedule(spec: dict, m: FiniteModel) -> ResolutionSchedule:
    """Schedule with the token ``"proj_error"`` replaced by the model's projection error."""

    def value(v):
        if isinstance(v, str):
            if v == "proj_error":
                return m.proj_error
            raise ConfigError(f"unknown schedule token {v!r}")
        return float(v)

    try:
        sched = ResolutionSchedule(tuple(value(v) for v in spec["epsilons"]),
                                   tuple(value(v) for v in spec["deltas"]),
                                   tuple(value(v) for v in spec["radii"]))
    except ResolutionError as exc:
        raise ConfigError(str(exc)) from exc
    return sched


__all__ = ["AnalysisConfig", "ConfigError", "ModelError", "RunConfig", "RunSection",
           "build_model", "load_config", "parse_config", "resolve_schedule"]
