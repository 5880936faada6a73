"""Toggling-frame bookkeeping for schedules of pi pulses.

Between pulses every weak-coupling Hamiltonian term keeps its form but may
change sign: a shift term ``I_kz`` flips at every pi pulse touching spin k,
and a coupling ``I_kz I_lz`` flips when exactly one of the two spins is
flipped. Integrating these signs gives the net evolution time of each term,
which is all that survives the schedule. This module is deliberately
independent of :mod:`nmrmod.dynamics`; the two are checked against each
other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby

import numpy as np

from .algebra import SpinSystem, pulse_2x2
from .schedule import Ghost, HardPulse, Schedule, SoftPi


class TogglingInapplicable(ValueError):
    """Raised for schedules whose pulses are not all pi rotations."""


@dataclass(frozen=True)
class TermProfile:
    """Piecewise-constant sign of one Hamiltonian term.

    ``pieces`` holds ``(start, end, sign)`` with times in units of tau.
    """

    pieces: tuple
    net_tau: Fraction
    tau: float

    @property
    def net_seconds(self) -> float:
        return float(self.net_tau) * self.tau


@dataclass(frozen=True)
class ToggleProfile:
    duration: Fraction
    tau: float
    terms: dict  # ("shift", k) or ("coupling", k, l) -> TermProfile

    def net(self, key) -> Fraction:
        return self.terms[key].net_tau

    def state(self, key) -> str:
        n = self.terms[key].net_tau
        if n == 0:
            return "refocused"
        if n == self.duration:
            return "active"
        return "partial"

    def surviving(self) -> list:
        return [k for k in self.terms if self.terms[k].net_tau != 0]

    def table(self, labels) -> list:
        """Rows ``(term name, net tau, net seconds, state)`` for reports."""
        rows = []
        for key, prof in self.terms.items():
            if key[0] == "shift":
                name = f"shift {labels[key[1]]}"
            else:
                name = f"J {labels[key[1]]}{labels[key[2]]}"
            rows.append((name, prof.net_tau, prof.net_seconds, self.state(key)))
        return rows


def _flip_sets(schedule: Schedule, n: int):
    """Yield ``(time, flipped spins)`` per distinct event time."""
    for t, group in groupby(schedule.sorted().events, key=lambda e: e.time):
        flipped = [0] * n
        for e in group:
            if isinstance(e, SoftPi):
                flipped[e.spin] ^= 1
            elif isinstance(e, HardPulse):
                if e.angle_deg % 360.0 != 180.0:
                    raise TogglingInapplicable(
                        f"hard pulse of {e.angle_deg} deg at {t}tau; "
                        "use brute-force simulation instead")
                flipped = [f ^ 1 for f in flipped]
        yield t, flipped


def _sign_walk(schedule: Schedule, n: int):
    """Per-spin sign on each interval: list of (start, end, signs)."""
    signs = [1] * n
    t0 = Fraction(0)
    out = []
    for t, flipped in _flip_sets(schedule, n):
        if t > t0:
            out.append((t0, t, tuple(signs)))
            t0 = t
        signs = [-s if f else s for s, f in zip(signs, flipped)]
    if schedule.duration > t0:
        out.append((t0, schedule.duration, tuple(signs)))
    return out


def toggling_analysis(schedule: Schedule, system: SpinSystem) -> ToggleProfile:
    n = system.n_spins
    walk = _sign_walk(schedule, n)
    keys = [("shift", k) for k in range(n)]
    keys += [("coupling", k, l) for k in range(n) for l in range(k + 1, n)]
    terms = {}
    for key in keys:
        pieces = []
        for a, b, s in walk:
            sign = s[key[1]] if key[0] == "shift" else s[key[1]] * s[key[2]]
            if pieces and pieces[-1][2] == sign:
                pieces[-1] = (pieces[-1][0], b, sign)
            else:
                pieces.append((a, b, sign))
        net = sum(((b - a) * s for a, b, s in pieces), Fraction(0))
        terms[key] = TermProfile(tuple(pieces), net, schedule.tau)
    return ToggleProfile(schedule.duration, schedule.tau, terms)


def frame_unitary(schedule: Schedule, n_spins: int) -> np.ndarray:
    """Product of all ideal pulses, ignoring free evolution.

    Built spin by spin from 2x2 factors and Kronecker-multiplied once.
    """
    per_spin = [np.eye(2, dtype=complex) for _ in range(n_spins)]
    for e in schedule.sorted().events:
        if isinstance(e, SoftPi):
            per_spin[e.spin] = pulse_2x2(np.pi, e.phase) @ per_spin[e.spin]
        elif isinstance(e, HardPulse):
            R = pulse_2x2(e.angle, e.phase)
            per_spin = [R @ p for p in per_spin]
    out = np.ones((1, 1), dtype=complex)
    for p in per_spin:
        out = np.kron(out, p)
    return out


def effective_phases(profile: ToggleProfile, system: SpinSystem) -> np.ndarray:
    """Diagonal of ``H_eff * T`` (radians) from net toggling times.

    Enumerates basis states directly: ``sum_k 2 pi delta_k T_k m_k +
    sum_{k<l} 2 pi J_kl T_kl m_k m_l`` with ``m = +-1/2``.
    """
    n = system.n_spins
    J = system.J_matrix
    out = np.zeros(2**n)
    for idx in range(2**n):
        m = [0.5 if not (idx >> (n - 1 - k)) & 1 else -0.5 for k in range(n)]
        e = 0.0
        for k in range(n):
            e += 2 * np.pi * system.delta[k] * profile.terms[("shift", k)].net_seconds * m[k]
            for l in range(k + 1, n):
                e += 2 * np.pi * J[k, l] * profile.terms[("coupling", k, l)].net_seconds * m[k] * m[l]
        out[idx] = e
    return out


def effective_unitary(schedule: Schedule, system: SpinSystem) -> np.ndarray:
    """Toggling-frame prediction of the ideal-pulse weak-coupling propagator.

    Equals ``frame_unitary @ exp(-i H_eff T)``; the frame factor is a global
    phase whenever each spin sees an even number of pulses about one axis.
    """
    profile = toggling_analysis(schedule, system)
    phases = effective_phases(profile, system)
    return frame_unitary(schedule, system.n_spins) @ np.diag(np.exp(-1j * phases))


def bloch_siegert_exposure(schedule: Schedule, n_spins: int) -> dict:
    """Uncompensated off-resonance kicks per (pulsed spin, neighbour) pair.

    A soft pulse on spin a shifts every other spin b slightly; in b's
    toggling frame that kick carries b's current shift sign. The returned
    value is the sum of those signs over all pulses on a: zero means the
    perturbation on b is refocused by the schedule itself.
    """
    walk = _sign_walk(schedule, n_spins)

    def sign_at(t, b):
        for a0, b0, s in walk:
            if a0 <= t < b0:
                return s[b]
        return walk[-1][2][b] if walk else 1

    out = {}
    for e in schedule.soft_pulses:
        for b in range(n_spins):
            if b == e.spin:
                continue
            # a pulse on b at the same instant would be a TSETSE violation
            s = sign_at(e.time, b)
            if any(isinstance(x, SoftPi) and x.spin == b and x.time == e.time
                   for x in schedule.events):
                continue
            out[(e.spin, b)] = out.get((e.spin, b), 0) + s
    return out


__all__ = [
    "TogglingInapplicable", "TermProfile", "ToggleProfile", "toggling_analysis",
    "frame_unitary", "effective_phases", "effective_unitary", "bloch_siegert_exposure",
]
