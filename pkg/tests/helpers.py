"""Shared generators and independent oracles for the test suite."""

from fractions import Fraction

import numpy as np
import scipy.linalg

from nmrmod.algebra import SpinSystem, embed, free_hamiltonian, pulse_2x2
from nmrmod.schedule import HardPulse, Schedule, SoftPi


def random_system(n, rng):
    labels = [f"s{k}" for k in range(n)]
    delta = rng.uniform(-300, 300, n)
    J = np.triu(rng.uniform(-15, 15, (n, n)), 1)
    return SpinSystem(labels, delta, J + J.T)


def random_dyadic_schedule(n, rng, tau=None):
    """Valid pi-pulse schedule on a 2^p grid: soft pulses never coincide on two spins."""
    p = int(rng.integers(1, 5))
    duration = 2**p
    events = []
    taken = set()
    slots = list(range(duration + 1))
    for k in range(n):
        count = 2 * int(rng.integers(0, 3))
        free = [t for t in slots if t not in taken]
        if len(free) < count:
            continue
        for t in sorted(rng.choice(free, size=count, replace=False)):
            taken.add(int(t))
            phase = float(rng.choice([0.0, 90.0, 180.0, 270.0, 33.0]))
            events.append(SoftPi(int(t), k, phase))
    if rng.random() < 0.5:
        for _ in range(2):
            events.append(HardPulse(Fraction(int(rng.integers(0, 2 * duration + 1)), 2),
                                    180.0, float(rng.choice([0.0, 90.0, 45.0]))))
    events.sort(key=lambda e: e.time)
    tau = tau if tau is not None else float(rng.uniform(1e-4, 5e-3))
    return Schedule(tau, duration, events)


def brute_force_unitary(schedule, system):
    """Interval-by-interval scipy expm of the free Hamiltonian with instantaneous pulses."""
    H = free_hamiltonian(system)
    n = system.n_spins
    U = np.eye(system.dim, dtype=complex)
    t_prev = Fraction(0)
    for e in sorted(schedule.events, key=lambda e: e.time):
        if e.time > t_prev:
            U = scipy.linalg.expm(-1j * H * float(e.time - t_prev) * schedule.tau) @ U
            t_prev = e.time
        if isinstance(e, SoftPi):
            U = embed(n, {e.spin: pulse_2x2(np.pi, np.radians(e.phase_deg))}) @ U
        elif isinstance(e, HardPulse):
            R = pulse_2x2(np.radians(e.angle_deg), np.radians(e.phase_deg))
            U = embed(n, {k: R for k in range(n)}) @ U
    if schedule.duration > t_prev:
        U = scipy.linalg.expm(-1j * H * float(schedule.duration - t_prev) * schedule.tau) @ U
    return U
