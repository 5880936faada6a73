"""Finite-mode convergence of one long shaped pulse as dt is halved.

Deviations are measured against a Richardson extrapolation built from
the two finest grids; a second-order integrator shows a ratio near 4.

    python3 scripts/convergence_study.py --duration 0.220 --halvings 5
"""

import argparse
from fractions import Fraction

import numpy as np

from nmrmod.algebra import phase_invariant_fidelity
from nmrmod.config import bundled_config
from nmrmod.dynamics import SimOptions, simulate_unitary
from nmrmod.schedule import Schedule, SoftPi
from nmrmod.shapes import reburp_envelope


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=0.220)
    ap.add_argument("--spin", default="S")
    ap.add_argument("--halvings", type=int, default=5)
    args = ap.parse_args()
    system = bundled_config().system
    env = reburp_envelope(args.duration)
    seg = Schedule(env.duration, 1, [SoftPi(Fraction(1, 2), system.index(args.spin), 90.0)])
    base = env.duration / env.n_samples
    dts = [base / 2**k for k in range(3, 3 + args.halvings)]
    Us = [simulate_unitary(seg, system, SimOptions("finite", dt=dt, envelope=env)) for dt in dts]
    ext = (4 * Us[-1] - Us[-2]) / 3
    prev = None
    print("dt_s          deviation   ratio  1-fidelity")
    for dt, U in zip(dts[:-1], Us[:-1]):
        a = np.vdot(ext, U)
        dev = float(np.linalg.norm(U - ext * a / abs(a)))
        ratio = f"{prev / dev:5.2f}" if prev else "    -"
        print(f"{dt:.4e}  {dev:.3e}  {ratio}  {1 - phase_invariant_fidelity(U, ext):.2e}")
        prev = dev


if __name__ == "__main__":
    main()
