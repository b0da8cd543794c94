import json
from pathlib import Path

import numpy as np
import pytest

from hamctrl.cli import EXIT_CONFIG, EXIT_NUMERIC, main, run
from hamctrl.config import TASKS, ConfigError, parse_config, parse_config_dict, serialize_config
from hamctrl.outputs import Report, Table, fmt, write_outputs

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
GOLDEN = {t: CONFIGS / f"{t}.yaml" for t in TASKS}
INVALID = sorted((CONFIGS / "invalid").glob("*.yaml"))


def run_task(task, out, capsys=None):
    code = main([task, "--config", str(GOLDEN[task]), "--out", str(out)])
    return code, (capsys.readouterr() if capsys else None)


def read_all(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


def test_every_task_has_golden_config():
    for task, path in GOLDEN.items():
        assert path.is_file(), task
        assert parse_config(path).task == task


@pytest.mark.parametrize("task", TASKS)
def test_golden_config_runs_and_reruns_identically(task, tmp_path):
    assert run_task(task, tmp_path / "a")[0] == 0
    assert run_task(task, tmp_path / "b")[0] == 0
    a, b = read_all(tmp_path / "a"), read_all(tmp_path / "b")
    assert a == b
    manifest = json.loads(a["manifest.json"])["files"]
    assert {m["file"] for m in manifest} | {"manifest.json"} == set(a)
    for m in manifest:
        assert m["bytes"] == len(a[m["file"]])


@pytest.mark.parametrize("task", TASKS)
def test_round_trip(task, tmp_path):
    cfg = parse_config(GOLDEN[task])
    path = tmp_path / "cfg.yaml"
    path.write_text(serialize_config(cfg))
    assert parse_config(path) == cfg


@pytest.mark.parametrize("path", INVALID, ids=lambda p: p.stem)
def test_invalid_fixtures_exit_2(path, tmp_path, capsys):
    with pytest.raises(ConfigError):
        parse_config(path)
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_invalid_messages():
    with pytest.raises(ConfigError) as info:
        parse_config(CONFIGS / "invalid" / "shape_mismatch.yaml")
    assert "3x3" in str(info.value) and "2x2" in str(info.value)
    assert "system.controls[0].matrix" in str(info.value)
    with pytest.raises(ConfigError) as info:
        parse_config(CONFIGS / "invalid" / "unknown_task.yaml")
    assert "teleport" in str(info.value) and all(t in str(info.value) for t in TASKS)
    with pytest.raises(ConfigError, match="seed"):
        parse_config(CONFIGS / "invalid" / "learn_without_seed.yaml")
    with pytest.raises(ConfigError, match="system.drift"):
        parse_config(CONFIGS / "invalid" / "bad_complex.yaml")


def test_missing_file_reference(tmp_path):
    raw = {"task": {"name": "decompose", "unitary": {"file": "nope.yaml"}}}
    with pytest.raises(ConfigError, match="task.unitary"):
        parse_config_dict(raw, tmp_path)


def test_task_mismatch_exits_2(tmp_path):
    assert main(["grape", "--config", str(GOLDEN["stirap"]), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_numeric_failure_exits_3(tmp_path):
    raw = {"task": {"name": "rwa-probe", "energies": [0.0, 1.0, 1.0], "omega": 0.1,
                    "duration": 1.0, "slices": 10, "pair": [1, 2]}}
    assert run(parse_config_dict(raw, tmp_path), tmp_path / "o") == EXIT_NUMERIC


def test_controllability_stdout(tmp_path, capsys):
    code, out = run_task("controllability", tmp_path, capsys)
    assert code == 0
    assert "FULL_SU" in out.out and "dim=3" in out.out


def test_stirap_populations_format(tmp_path):
    assert run_task("stirap", tmp_path)[0] == 0
    lines = (tmp_path / "populations.csv").read_text().splitlines()
    cfg = parse_config(GOLDEN["stirap"])
    assert lines[0] == "t,p1,p2,p3,dark"
    assert len(lines) - 1 == cfg.params.get("slices", 2000) + 1


def test_grape_report_monotone(tmp_path):
    assert run_task("grape", tmp_path)[0] == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    j = rep["J_history"]
    assert all(b >= a for a, b in zip(j, j[1:]))
    assert "wall_time" not in rep
    assert rep["final_A"] >= 0.999


def test_write_outputs(tmp_path):
    assert write_outputs({}, tmp_path / "empty") == []
    assert json.loads((tmp_path / "empty" / "manifest.json").read_text()) == {"files": []}
    traj = Table(["t", "p1"], [[k * 0.1, 1.0] for k in range(4)])
    man = write_outputs({"trajectory": traj, "report": Report({"x": 1})}, tmp_path / "o", ["csv"])
    assert [m["file"] for m in man] == ["trajectory.csv"]
    assert len((tmp_path / "o" / "trajectory.csv").read_text().splitlines()) == 5


def test_fmt():
    assert fmt(-0.0) == "0"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(np.int64(7)) == "7"
    assert fmt(1.5e-20) == "1.5e-20"
