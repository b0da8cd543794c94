"""Command-line entry point.

Usage::

    hamctrl <task> --config <path> [--out <dir>] [--verbose]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import adiabatic, controllability, geometric, learning, optimal_control
from .config import TASKS, ConfigError, RunConfig, parse_config, parse_ket, parse_matrix
from .core import DensityError, basis_ket, pure_state_density, purity
from .dynamics import (
    ControlSystem,
    LindbladChannel,
    PulseSchedule,
    gate_fidelity,
    propagate_density,
    propagate_ket,
    propagate_open,
    total_propagator,
)
from .outputs import Report, Table, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("hamctrl")


def build_system(cfg: RunConfig) -> ControlSystem:
    controls = cfg.controls()
    return ControlSystem(cfg.drift(), tuple(m for _, m in controls), tuple(lbl for lbl, _ in controls))


def build_schedule(cfg: RunConfig, n_controls: int) -> PulseSchedule:
    s = cfg.schedule
    k = s["slices"]
    fields = s["fields"]
    if fields == "zero":
        values = np.zeros((k, n_controls))
    elif isinstance(fields, dict):
        values = optimal_control.random_fields(k, n_controls, fields["random"], cfg.seed)
    else:
        values = np.asarray(fields, dtype=float).reshape(k, n_controls)
    return PulseSchedule(values, s["dt"], s["t0"], s.get("f_max"))


def _initial_density(cfg: RunConfig, dim: int) -> np.ndarray:
    p = cfg.params
    if "initial_density" in p:
        return parse_matrix(p["initial_density"], "task.initial_density", dim)
    if "initial_state" in p:
        return pure_state_density(parse_ket(p["initial_state"], "task.initial_state", dim))
    return pure_state_density(basis_ket(0, dim))


def _objective(cfg: RunConfig, dim: int) -> optimal_control.ObjectiveSpec:
    o = cfg.params["objective"]
    pen = o.get("penalty")
    if o["kind"] == "gate":
        return optimal_control.ObjectiveSpec.gate(parse_matrix(o["target"], "task.objective.target", dim), pen)
    psi = parse_ket(o["initial_state"], "task.objective.initial_state", dim)
    a = parse_matrix(o["observable"], "task.objective.observable", dim)
    return optimal_control.ObjectiveSpec.observable(a, pure_state_density(psi), pen)


def _population_table(times, pops, extra_header=(), extra_cols=()) -> Table:
    n = pops.shape[1]
    header = ["t", *[f"p{i + 1}" for i in range(n)], *extra_header]
    rows = [[t, *p, *(c[k] for c in extra_cols)] for k, (t, p) in enumerate(zip(times, pops))]
    return Table(header, rows)


def _matrix_table(m) -> Table:
    m = np.asarray(m)
    return Table(["i", "j", "re", "im"],
                 [[i + 1, j + 1, m[i, j].real, m[i, j].imag] for i in range(m.shape[0]) for j in range(m.shape[1])])


def _schedule_table(sched: PulseSchedule, labels=None) -> Table:
    m = sched.n_controls
    header = ["k", "t", *[f"f_{i + 1}" for i in range(m)]]
    t = sched.boundaries()[:-1]
    return Table(header, [[k + 1, t[k], *sched.values[k]] for k in range(sched.n_slices)])


def task_simulate(cfg: RunConfig):
    sys_ = build_system(cfg)
    sched = build_schedule(cfg, sys_.n_controls)
    every = cfg.params.get("record_every", 1)
    u = total_propagator(sys_, sched)
    if "initial_density" in cfg.params:
        traj = propagate_density(sys_, sched, _initial_density(cfg, sys_.dim), every)
        final = _matrix_table(traj.final)
    else:
        psi0 = parse_ket(cfg.params["initial_state"], "task.initial_state", sys_.dim) \
            if "initial_state" in cfg.params else basis_ket(0, sys_.dim)
        traj = propagate_ket(sys_, sched, psi0, every)
        final = Table(["n", "re", "im"], [[i + 1, z.real, z.imag] for i, z in enumerate(traj.final)])
    pops = traj.populations()
    arts = {
        "trajectory": _population_table(traj.times, pops),
        "final_state": final,
        "propagator": _matrix_table(u),
        "report": Report({"task": "simulate", "dim": sys_.dim, "slices": sched.n_slices,
                          "final_populations": pops[-1].tolist()}),
    }
    return arts, "final populations: " + " ".join(f"{p:.6f}" for p in pops[-1])


def task_open_simulate(cfg: RunConfig):
    sys_ = build_system(cfg)
    sched = build_schedule(cfg, sys_.n_controls)
    channels = [LindbladChannel(parse_matrix(c["operator"], f"task.channels[{i}].operator", sys_.dim), c["rate"])
                for i, c in enumerate(cfg.params.get("channels", []))]
    traj = propagate_open(sys_, sched, channels, _initial_density(cfg, sys_.dim),
                          cfg.params.get("substeps", 10), cfg.params.get("record_every", 1))
    pops = traj.populations()
    traces = [np.trace(r).real for r in traj.states]
    purities = [purity(r) for r in traj.states]
    arts = {
        "trajectory": _population_table(traj.times, pops, ("trace", "purity"), (traces, purities)),
        "final_state": _matrix_table(traj.final),
        "report": Report({"task": "open-simulate", "dim": sys_.dim, "channels": len(channels),
                          "final_populations": pops[-1].tolist(), "final_purity": purities[-1]}),
    }
    return arts, "final populations: " + " ".join(f"{p:.6f}" for p in pops[-1])


def task_controllability(cfg: RunConfig):
    sys_ = build_system(cfg)
    tol = cfg.params.get("tol", 1e-9)
    lie = controllability.generate_lie_algebra(sys_, cfg.params.get("max_depth"), tol)
    verdict = controllability.is_controllable(sys_, tol, cfg.params.get("max_depth"))
    arts = {}
    report = {"task": "controllability", "verdict": verdict.kind.value, "lie_dimension": verdict.lie_dimension,
              "required": verdict.required, "dim_hilbert": sys_.dim, "closed": lie.closed}
    if sys_.controls:
        ok, gram = controllability.orthogonality_check(sys_.controls, tol)
        arts["gram"] = _matrix_table(gram)
        report["orthogonal_controls"] = ok
    arts["report"] = Report(report)
    return arts, f"{verdict.kind.value} dim={verdict.lie_dimension} required={verdict.required}"


def task_decompose(cfg: RunConfig):
    p = cfg.params
    u = parse_matrix(p["unitary"], "task.unitary", 2)
    f_max = p.get("f_max", 1.0)
    steps = geometric.decompose_su2(u, f_max)
    sched = geometric.pulses_from_steps(steps, f_max, p.get("dt", 0.1))
    fid_steps = gate_fidelity(geometric.reconstruct(steps), u)
    fid_sched = gate_fidelity(total_propagator(geometric.synthesis_system(), sched), u)
    arts = {
        "steps": Table(["step", "generator", "coefficient", "duration", "amplitude"],
                       [[i + 1, s.generator, s.coefficient, s.duration, s.amplitude] for i, s in enumerate(steps)]),
        "schedule": _schedule_table(sched),
        "report": Report({"task": "decompose", "generators": list(geometric.SYNTH_ORDER),
                          "fidelity_steps": fid_steps, "fidelity_schedule": fid_sched,
                          "slices": sched.n_slices}),
    }
    return arts, f"angles: {' '.join(f'{s.generator}={s.coefficient:.6f}' for s in steps)} fidelity={fid_sched:.12f}"


def task_rwa_probe(cfg: RunConfig):
    p = cfg.params
    energies = np.asarray(p["energies"], dtype=float)
    a, b = (x - 1 for x in p.get("pair", [1, 2]))
    table = geometric.transition_table(np.diag(energies), {(a, b): p.get("dipole", 1.0)})
    rep = geometric.rwa_consistency_probe(table, ((a, b), p["omega"], p.get("phase", 0.0)),
                                          p["duration"], p["slices"])
    n = len(energies)
    header = ["t", *[f"p{i + 1}_lab" for i in range(n)], *[f"p{i + 1}_rwa" for i in range(n)], "deviation"]
    rows = [[t, *pl, *pr, d] for t, pl, pr, d in
            zip(rep.times, rep.populations_lab, rep.populations_rwa, rep.deviation)]
    ok, _ = geometric.strong_regularity(table)
    arts = {
        "probe": Table(header, rows),
        "report": Report({"task": "rwa-probe", "max_deviation": rep.max_deviation,
                          "transition_frequency": table.frequencies[(a, b)], "strongly_regular": ok}),
    }
    return arts, f"max population deviation: {rep.max_deviation:.6g}"


def task_grape(cfg: RunConfig):
    sys_ = build_system(cfg)
    sched0 = build_schedule(cfg, sys_.n_controls)
    obj = _objective(cfg, sys_.dim)
    p = cfg.params
    opts = optimal_control.OptimizeOptions(max_iter=p.get("max_iter", 500), step=p.get("step", 1.0),
                                           tol_grad=p.get("tol_grad", 1e-8),
                                           line_search=p.get("line_search", True), seed=cfg.seed)
    sched, rep = optimal_control.optimize(sys_, sched0, obj, opts)
    log.info("grape finished in %.3f s", rep.wall_time)
    history = Table(["iteration", "J", "A", "C"],
                    [[i, j, a, c] for i, (j, a, c) in enumerate(zip(rep.j_history, rep.a_history, rep.c_history))])
    arts = {
        "schedule": _schedule_table(sched),
        "history": history,
        "report": Report({"task": "grape", "objective": obj.kind.value, "iterations": rep.iterations,
                          "final_A": rep.final_a, "final_cost": rep.final_cost, "converged": rep.converged,
                          "stop_reason": rep.stop_reason, "J_history": rep.j_history}),
    }
    return arts, f"final A={rep.final_a:.10f} J={rep.j_history[-1]:.10f} iterations={rep.iterations}"


def task_stirap(cfg: RunConfig):
    params = adiabatic.StirapParams(**{k: v for k, v in cfg.params.items()
                                       if k in ("omega0", "width", "delay", "t0", "tf", "slices")})
    res = adiabatic.simulate_stirap(params)
    frame = adiabatic.stirap_frame(params)
    margin = adiabatic.adiabaticity_margin(frame)
    arts = {
        "populations": Table(["t", "p1", "p2", "p3", "dark"],
                             [[t, *p, d] for t, p, d in zip(res.times, res.populations, res.dark_overlap)]),
        "eigenvalues": Table(["t", "e1", "e2", "e3"], [[t, *e] for t, e in zip(frame.times, frame.eigenvalues)]),
        "report": Report({"task": "stirap", "efficiency": res.efficiency, "max_intermediate": res.max_intermediate,
                          "dark_overlap_min": res.dark_overlap_min, "adiabaticity_margin": margin}),
    }
    return arts, f"efficiency={res.efficiency:.6f} max_intermediate={res.max_intermediate:.6f}"


def task_learn(cfg: RunConfig):
    sys_ = build_system(cfg)
    obj = _objective(cfg, sys_.dim)
    p = cfg.params
    shots = p.get("shots", "unlimited")
    lc = learning.LearningConfig(
        population=p.get("population", 40), generations=p.get("generations", 200),
        elitism=p.get("elitism", 2), tournament=p.get("tournament", 3),
        crossover_rate=p.get("crossover_rate", 0.7), mutation_sigma=p.get("mutation_sigma", 0.2),
        shots=None if shots == "unlimited" else shots, seed=cfg.seed, f_max=p.get("f_max", 3.0),
        n_slices=cfg.schedule["slices"], dt=cfg.schedule["dt"], encoding=p.get("encoding", "raw"))
    best, records = learning.run_learning(sys_, obj, lc)
    sched = learning.decode(best.genes, lc, sys_.n_controls)
    arts = {
        "records": Table(["gen", "best", "mean", "worst"], [[r.generation, r.best, r.mean, r.worst] for r in records]),
        "best_field": _schedule_table(sched),
        "report": Report({"task": "learn", "best_fitness": best.fitness, "generations": lc.generations,
                          "population": lc.population, "shots": shots}),
    }
    return arts, f"best fitness={best.fitness:.6f}"


HANDLERS = {
    "simulate": task_simulate,
    "open-simulate": task_open_simulate,
    "controllability": task_controllability,
    "decompose": task_decompose,
    "rwa-probe": task_rwa_probe,
    "grape": task_grape,
    "stirap": task_stirap,
    "learn": task_learn,
}
assert set(HANDLERS) == set(TASKS)


def run(cfg: RunConfig, out_dir=None) -> int:
    """Execute a parsed config and write its outputs. Returns an exit code."""
    out = Path(out_dir) if out_dir is not None else cfg.base_dir / cfg.output["directory"]
    t0 = time.perf_counter()
    try:
        artifacts, summary = HANDLERS[cfg.task](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, DensityError) as exc:
        print(f"numerical failure in {cfg.task}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        manifest = write_outputs(artifacts, out, cfg.output["formats"])
    except OSError as exc:
        print(f"I/O error writing {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary)
    log.info("%s done in %.3f s; wrote %d files to %s", cfg.task, time.perf_counter() - t0, len(manifest), out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hamctrl", description="Hamiltonian engineering toolbox")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.task != args.task:
        print(f"config error: task.name is {cfg.task!r} but {args.task!r} was requested", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
