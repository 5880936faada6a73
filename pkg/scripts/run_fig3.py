"""Shift-module sweep on the bundled three-proton system.

Prints the phase of every multiplet after each pi/2 step of the shift
module on the chosen spin, in ideal mode by default.

    python3 scripts/run_fig3.py --steps 5
    python3 scripts/run_fig3.py --mode finite --spin I
"""

import argparse
import math

from nmrmod.config import bundled_config
from nmrmod.dynamics import SimOptions
from nmrmod.spectra import run_fig3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5)
    ap.add_argument("--spin", default="I")
    ap.add_argument("--mode", choices=["ideal", "finite"], default="ideal")
    args = ap.parse_args()
    cfg = bundled_config()
    opts = SimOptions(args.mode, envelope=cfg.envelope())
    rows = run_fig3(cfg.system, args.steps, active=args.spin, opts=opts)
    labels = cfg.system.labels
    print("step  duration_s  " + "  ".join(f"{l}/pi".rjust(7) for l in labels))
    for r in rows:
        print(f"{r.step:4d}  {r.tau8_s:10.6f}  " + "  ".join(f"{r.phases[l] / math.pi:7.4f}" for l in labels))


if __name__ == "__main__":
    main()
