"""Run configuration: YAML in, validated :class:`RunConfig` out.

The layout is described by ``schema.json`` next to this module. Structural
checks come from the schema; dimension checks and cross-block rules are done
here. Every error message starts with the dotted key path it refers to.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

TASKS = ("simulate", "open-simulate", "controllability", "decompose", "rwa-probe", "grape", "stirap", "learn")
NEEDS_SYSTEM = {"simulate", "open-simulate", "controllability", "grape", "learn"}
NEEDS_SCHEDULE = {"simulate", "open-simulate", "grape", "learn"}
STOCHASTIC = {"learn"}


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("hamctrl").joinpath("schema.json").read_text())


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _validate(instance: Any, schema: dict, root: dict, prefix: tuple = ()) -> None:
    validator = jsonschema.Draft202012Validator({**schema, "$defs": root["$defs"]})
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            where = _path((*prefix, *e.absolute_path))
            msg = e.message
            if e.validator == "oneOf" and e.context:
                msg = "; ".join(sorted({c.message for c in e.context}))
            lines.append(f"{where}: {msg}")
        raise ConfigError("\n".join(lines))


def parse_matrix(value, where: str, dim: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError(f"{where}: expected a list of rows of [re, im] pairs")
    m = arr[..., 0] + 1j * arr[..., 1]
    if m.shape[0] != m.shape[1]:
        raise ConfigError(f"{where}: matrix is not square (shape {m.shape[0]}x{m.shape[1]})")
    if dim is not None and m.shape[0] != dim:
        raise ConfigError(f"{where}: shape {m.shape[0]}x{m.shape[1]} does not match dimension {dim}")
    return m


def parse_ket(value, where: str, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    psi = arr[:, 0] + 1j * arr[:, 1]
    if dim is not None and psi.size != dim:
        raise ConfigError(f"{where}: state has {psi.size} amplitudes, expected {dim}")
    return psi


def matrix_to_yaml(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _resolve_files(node: Any, base: Path, where: tuple) -> Any:
    """Inline every ``{"file": path}`` matrix reference."""
    if isinstance(node, dict):
        if set(node) == {"file"} and isinstance(node["file"], str):
            p = (base / node["file"]).resolve()
            if not p.is_file():
                raise ConfigError(f"{_path(where)}: referenced file {node['file']!r} does not exist")
            return yaml.safe_load(p.read_text())
        return {k: _resolve_files(v, base, (*where, k)) for k, v in node.items()}
    if isinstance(node, list):
        return [_resolve_files(v, base, (*where, i)) for i, v in enumerate(node)]
    return node


@dataclass(eq=False)
class RunConfig:
    task: str
    params: dict = field(default_factory=dict)
    system: dict | None = None
    schedule: dict | None = None
    output: dict = field(default_factory=dict)
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"seed": self.seed, "task": {"name": self.task, **self.params}}
        if self.system is not None:
            d["system"] = copy.deepcopy(self.system)
        if self.schedule is not None:
            d["schedule"] = copy.deepcopy(self.schedule)
        d["output"] = copy.deepcopy(self.output)
        return d

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()

    # numeric views -------------------------------------------------------

    def drift(self) -> np.ndarray:
        return parse_matrix(self.system["drift"], "system.drift", self.system["dimension"])

    def controls(self) -> list[tuple[str, np.ndarray]]:
        dim = self.system["dimension"]
        out = []
        for i, c in enumerate(self.system.get("controls", [])):
            m = parse_matrix(c["matrix"], f"system.controls[{i}].matrix", dim)
            out.append((c.get("label", f"f{i + 1}"), m))
        return out


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return parse_config_dict(raw, path.parent)


def parse_config_dict(raw: Any, base_dir: Path | str = ".") -> RunConfig:
    base_dir = Path(base_dir)
    if not isinstance(raw, dict):
        raise ConfigError("<root>: config must be a mapping")
    raw = _resolve_files(copy.deepcopy(raw), base_dir, ())
    schema = load_schema()
    top = {k: v for k, v in schema.items() if k != "$defs"}
    _validate(raw, top, schema)
    name = raw["task"]["name"]
    _validate(raw["task"], schema["$defs"]["tasks"][name], schema, ("task",))

    if name in NEEDS_SYSTEM and "system" not in raw:
        raise ConfigError(f"system: required for task {name!r}")
    if name in NEEDS_SCHEDULE and "schedule" not in raw:
        raise ConfigError(f"schedule: required for task {name!r}")
    schedule = raw.get("schedule")
    random_fields = isinstance(schedule, dict) and isinstance(schedule.get("fields"), dict)
    if "seed" not in raw and (name in STOCHASTIC or random_fields):
        raise ConfigError(f"seed: required for stochastic task {name!r}" if name in STOCHASTIC
                          else "seed: required when schedule.fields is random")

    params = {k: v for k, v in raw["task"].items() if k != "name"}
    cfg = RunConfig(
        task=name,
        params=params,
        system=raw.get("system"),
        schedule=raw.get("schedule"),
        output={"directory": "out", "formats": ["csv", "report"], **raw.get("output", {})},
        seed=int(raw.get("seed", 0)),
        base_dir=base_dir,
    )
    if cfg.schedule is not None:
        cfg.schedule = {"t0": 0.0, "fields": "zero", **cfg.schedule}
    _check_dimensions(cfg)
    return cfg


def _check_dimensions(cfg: RunConfig) -> None:
    if cfg.system is not None:
        dim = cfg.system["dimension"]
        drift = parse_matrix(cfg.system["drift"], "system.drift")
        bad = []
        for i, c in enumerate(cfg.system.get("controls", [])):
            m = parse_matrix(c["matrix"], f"system.controls[{i}].matrix")
            if m.shape != drift.shape:
                bad.append(f"system.controls[{i}].matrix is {m.shape[0]}x{m.shape[1]} "
                           f"but system.drift is {drift.shape[0]}x{drift.shape[1]}")
        if bad:
            raise ConfigError("\n".join(bad))
        if drift.shape[0] != dim:
            raise ConfigError(f"system.drift: shape {drift.shape[0]}x{drift.shape[1]} "
                              f"does not match system.dimension={dim}")
    dim = cfg.system["dimension"] if cfg.system is not None else None
    p = cfg.params
    for key in ("initial_state",):
        if key in p:
            parse_ket(p[key], f"task.{key}", dim)
    for key in ("initial_density",):
        if key in p:
            parse_matrix(p[key], f"task.{key}", dim)
    for i, ch in enumerate(p.get("channels", [])):
        parse_matrix(ch["operator"], f"task.channels[{i}].operator", dim)
    if "unitary" in p:
        parse_matrix(p["unitary"], "task.unitary", 2)
    obj = p.get("objective")
    if obj is not None:
        if obj["kind"] == "gate":
            if "target" not in obj:
                raise ConfigError("task.objective.target: required for a gate objective")
            parse_matrix(obj["target"], "task.objective.target", dim)
        else:
            for key in ("observable", "initial_state"):
                if key not in obj:
                    raise ConfigError(f"task.objective.{key}: required for an observable objective")
            parse_matrix(obj["observable"], "task.objective.observable", dim)
            parse_ket(obj["initial_state"], "task.objective.initial_state", dim)
        if cfg.task == "learn" and obj["kind"] == "gate" and p.get("shots", "unlimited") != "unlimited":
            raise ConfigError("task.shots: finite shots need an observable objective")
    fields = (cfg.schedule or {}).get("fields")
    if isinstance(fields, list):
        n_ctrl = len(cfg.system.get("controls", [])) if cfg.system else 0
        arr = np.asarray(fields, dtype=float)
        if arr.shape != (cfg.schedule["slices"], n_ctrl):
            raise ConfigError(f"schedule.fields: shape {arr.shape} does not match "
                              f"(slices={cfg.schedule['slices']}, controls={n_ctrl})")
    if cfg.task == "rwa-probe":
        n = len(p["energies"])
        pair = p.get("pair", [1, 2])
        if not 1 <= pair[0] < pair[1] <= n:
            raise ConfigError(f"task.pair: {pair} must satisfy 1 <= n < n' <= {n}")
