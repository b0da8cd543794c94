"""Transfer efficiency of the Lambda system over pulse delay and duration.

Delays are in units of the pulse width; negative delays put the pump first.
Durations stretch the canonical pulse pair by the listed factors.
"""
import argparse
import sys

import numpy as np

from hamctrl.adiabatic import StirapParams, adiabaticity_margin, simulate_stirap, stirap_frame
from hamctrl.outputs import Table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delays", type=float, nargs="+", default=list(np.round(np.linspace(-2, 3, 11), 3)))
    ap.add_argument("--scales", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--omega0", type=float, default=10.0)
    ap.add_argument("--slices", type=int, default=2000)
    args = ap.parse_args(argv)

    rows = []
    for scale in args.scales:
        for delay in args.delays:
            p = StirapParams(omega0=args.omega0, delay=delay, slices=args.slices).scaled(scale)
            res = simulate_stirap(p)
            margin = adiabaticity_margin(stirap_frame(p)) if delay > 0 else float("nan")
            rows.append([scale, delay * scale, res.efficiency, res.max_intermediate, margin])
    sys.stdout.write(Table(["scale", "delay", "efficiency", "max_p2", "margin"], rows).render())


if __name__ == "__main__":
    main()
