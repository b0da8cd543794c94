"""Multi-start gradient optimisation of a Hadamard-like qubit gate.

Runs independent seeds concurrently and reports iterations to reach the
threshold, final fidelity and field energy for each penalty weight.
"""
import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from hamctrl.core import SIGMA_X, SIGMA_Z
from hamctrl.dynamics import ControlSystem, PulseSchedule
from hamctrl.optimal_control import ObjectiveSpec, OptimizeOptions, optimize, random_fields
from hamctrl.outputs import Table

HADAMARD = (SIGMA_X + SIGMA_Z) / np.sqrt(2)


def one(job):
    seed, lam, slices, duration, iters, threshold = job
    sys_ = ControlSystem(SIGMA_Z, (SIGMA_X,))
    sched = PulseSchedule(random_fields(slices, 1, 1.0, seed), duration / slices)
    out, rep = optimize(sys_, sched, ObjectiveSpec.gate(HADAMARD, [lam]), OptimizeOptions(max_iter=iters))
    hit = next((i for i, a in enumerate(rep.a_history) if a >= threshold), -1)
    energy = float(np.sum(out.values**2) * out.dt)
    return [seed, lam, hit, rep.iterations, rep.final_a, energy]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[1e-4, 1e-3, 1e-2])
    ap.add_argument("--slices", type=int, default=20)
    ap.add_argument("--duration", type=float, default=5.0)
    ap.add_argument("--max-iter", type=int, default=500)
    ap.add_argument("--threshold", type=float, default=0.999)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    jobs = [(s, lam, args.slices, args.duration, args.max_iter, args.threshold)
            for lam in args.lambdas for s in range(args.seeds)]
    with ProcessPoolExecutor(args.workers) as ex:
        rows = list(ex.map(one, jobs))
    header = ["seed", "lambda", "iter_to_threshold", "iterations", "fidelity", "field_energy"]
    sys.stdout.write(Table(header, rows).render())


if __name__ == "__main__":
    main()
