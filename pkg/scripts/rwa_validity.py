"""Lab-frame versus RWA population deviation as the drive gets stronger.

For a resonant pi pulse on a qubit of splitting ``omega`` the deviation
grows with ``Omega / omega``; the slice count keeps ~40 slices per carrier
period.
"""
import argparse
import sys

import numpy as np

from hamctrl.geometric import rwa_consistency_probe, transition_table
from hamctrl.outputs import Table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=float, default=20.0, help="transition frequency")
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 0.5])
    ap.add_argument("--per-period", type=int, default=40)
    args = ap.parse_args(argv)

    table = transition_table(np.diag([0.0, args.omega]))
    rows = []
    for r in args.ratios:
        rabi = r * args.omega
        duration = np.pi / (2 * rabi)
        slices = int(np.ceil(duration * args.omega / (2 * np.pi) * args.per_period))
        rep = rwa_consistency_probe(table, ((0, 1), rabi, 0.0), duration, slices)
        rows.append([r, rabi, slices, rep.max_deviation, rep.populations_lab[-1, 1]])
    sys.stdout.write(Table(["ratio", "rabi", "slices", "max_deviation", "p2_lab_final"], rows).render())


if __name__ == "__main__":
    main()
