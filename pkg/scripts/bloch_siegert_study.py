"""Phase kick on a neighbouring spin from one shaped pi pulse.

Scans the pulsed spin's offset against a fixed observer and prints the
observer's extra z-phase with and without a ghost pulse at its mirror
frequency. The kick should shrink roughly as 1/offset.

    python3 scripts/bloch_siegert_study.py --duration 0.121
"""

import argparse

import numpy as np

from nmrmod.algebra import SpinSystem
from nmrmod.dynamics import SimOptions, neighbour_phase_error
from nmrmod.shapes import reburp_envelope


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=0.121, help="pulse length in seconds")
    ap.add_argument("--offsets", default="100,200,400,800", help="pulsed - observer separations, Hz")
    args = ap.parse_args()
    opts = SimOptions("finite", envelope=reburp_envelope(args.duration))
    print("separation_hz  raw_rad      ghost_rad    raw*separation")
    for sep in (float(x) for x in args.offsets.split(",")):
        system = SpinSystem(["S", "R"], [0.0, sep], np.zeros((2, 2)))
        raw = neighbour_phase_error(system, "S", "R", opts)
        ghost = neighbour_phase_error(system, "S", "R", opts, ghost=True)
        print(f"{sep:13.1f}  {raw:+.4e}  {ghost:+.4e}  {raw * sep:+.4f}")


if __name__ == "__main__":
    main()
