"""Deterministic artifact writers: CSV tables, JSON reports and a manifest."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if x == 0:
        return "0"  # folds -0
    return f"{x:.{SIG_DIGITS}g}"


def _round(obj):
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(fmt(x))
    return obj


@dataclass
class Table:
    header: list[str]
    rows: list = field(default_factory=list)

    def render(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("row length does not match header")
            lines.append(",".join(fmt(v) for v in row))
        return "\n".join(lines) + "\n"


@dataclass
class Report:
    content: dict

    def render(self) -> str:
        return json.dumps(_round(self.content), indent=2, sort_keys=True) + "\n"


def write_outputs(artifacts: dict[str, Table | Report], out_dir, formats=("csv", "report")) -> list[dict]:
    """Write artifacts to ``out_dir`` and return the manifest entries.

    Tables go to ``<name>.csv`` and reports to ``<name>.json``; artifacts
    whose kind is not listed in ``formats`` are skipped. ``manifest.json``
    lists every written file with its byte size.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name in sorted(artifacts):
        art = artifacts[name]
        if isinstance(art, Table):
            if "csv" not in formats:
                continue
            fname = f"{name}.csv"
        elif isinstance(art, Report):
            if "report" not in formats:
                continue
            fname = f"{name}.json"
        else:
            raise TypeError(f"unsupported artifact {type(art).__name__}")
        data = art.render().encode()
        (out / fname).write_bytes(data)
        manifest.append({"file": fname, "bytes": len(data)})
    (out / "manifest.json").write_text(json.dumps({"files": manifest}, indent=2) + "\n")
    return manifest
