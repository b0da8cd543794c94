"""Closed-loop learning on a qubit with finite measurement statistics.

Each row is one (shots, seed) run; best is the noiseless fitness of the
best champion found.
"""
import argparse
import sys

import numpy as np

from hamctrl.core import SIGMA_X, SIGMA_Z
from hamctrl.dynamics import ControlSystem
from hamctrl.learning import LearningConfig, run_learning
from hamctrl.optimal_control import ObjectiveSpec
from hamctrl.outputs import Table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", nargs="+", default=["unlimited", "10000", "1000", "100"])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--generations", type=int, default=200)
    ap.add_argument("--population", type=int, default=40)
    args = ap.parse_args(argv)

    sys_ = ControlSystem(SIGMA_Z, (SIGMA_X,))
    obj = ObjectiveSpec.observable(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))
    rows = []
    for shots in args.shots:
        n = None if shots == "unlimited" else int(shots)
        for seed in range(args.seeds):
            cfg = LearningConfig(population=args.population, generations=args.generations, shots=n,
                                 seed=seed, f_max=2.0, n_slices=10, dt=0.2)
            best, rec = run_learning(sys_, obj, cfg)
            first = next((r.generation for r in rec if r.best >= 0.9), -1)
            rows.append([shots, seed, best.fitness, first])
    sys.stdout.write(Table(["shots", "seed", "best", "first_gen_0.9"], rows).render())


if __name__ == "__main__":
    main()
