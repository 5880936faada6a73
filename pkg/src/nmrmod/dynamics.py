"""Brute-force propagation of schedules.

Two modes:

``ideal``
    free evolution under the pulse-free Hamiltonian alternated with
    instantaneous pulse unitaries; soft pulses are perfectly selective.
``finite``
    every soft pulse is a shaped RF field of finite duration centred on its
    event time and felt by *all* spins. The pulse window is sliced at ``dt``
    and each slice is propagated exactly with a piecewise-constant
    Hamiltonian (midpoint carrier phase). Off-resonance effects such as the
    Bloch-Siegert shift emerge from the integration.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .algebra import (
    CouplingModel, SpinSystem, embed, free_hamiltonian, hard_pulse, is_hermitian,
    partial_trace_keep, propagator, selective_pulse, trace_distance, SPIN_HALF,
)
from .schedule import Ghost, HardPulse, Schedule, SoftPi, validate
from .shapes import ShapedPulse, reburp_envelope

DEFAULT_SOFT_DURATION = 0.121  # s


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimOptions:
    """Simulation settings.

    Parameters
    ----------
    mode : {"ideal", "finite"}
    dt : float, optional
        Finite-mode slice width in seconds. Defaults to
        ``1 / (50 * fastest frequency)``.
    coupling_model : CouplingModel, optional
        Overrides the system's own coupling model.
    miscalibration : float
        Fractional flip-angle error applied to every soft pulse.
    ghost_compensation : bool
        Honour ghost events (finite mode only).
    envelope : ShapedPulse, optional
        Template for soft pulses, calibrated to pi; its carrier and target
        are replaced per event. Defaults to a RE-BURP refocusing shape.
    """

    mode: str = "ideal"
    dt: float | None = None
    coupling_model: CouplingModel | None = None
    miscalibration: float = 0.0
    ghost_compensation: bool = False
    envelope: ShapedPulse | None = None

    def __post_init__(self):
        if self.mode not in ("ideal", "finite"):
            raise ValueError(f"mode must be 'ideal' or 'finite', got {self.mode!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not abs(self.miscalibration) < 0.5:
            raise ValueError("|miscalibration| must be below 0.5")

    @property
    def pulse_template(self) -> ShapedPulse:
        return self.envelope if self.envelope is not None else reburp_envelope(DEFAULT_SOFT_DURATION)


@dataclass(frozen=True)
class DensityState:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if not is_hermitian(rho):
            raise ValueError("density matrix is not hermitian")
        if abs(np.trace(rho) - 1) > 1e-12:
            raise ValueError(f"density matrix trace is {np.trace(rho).real}, expected 1")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
            raise ValueError("density matrix has negative eigenvalues")
        object.__setattr__(self, "matrix", rho)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @classmethod
    def pure(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityState":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def z_polarized(cls, system: SpinSystem, polarization: float | None = None) -> "DensityState":
        """High-temperature-like state ``(1 + 2p sum_k I_kz) / dim``."""
        n = system.n_spins
        p = 1.0 / n if polarization is None else polarization
        Fz = sum(embed(n, {k: SPIN_HALF["Iz"]}) for k in range(n))
        return cls((np.eye(system.dim) + 2 * p * Fz) / system.dim)


def evolve_density(rho: DensityState, U: np.ndarray) -> DensityState:
    if U.shape != rho.matrix.shape:
        raise ValueError(f"dimension mismatch: {U.shape} vs {rho.matrix.shape}")
    return DensityState(U @ rho.matrix @ U.conj().T)


# ------------------------------------------------------------------- ideal

def _system_for(system: SpinSystem, opts: SimOptions) -> SpinSystem:
    if opts.coupling_model is None:
        return system
    return system.with_coupling_model(opts.coupling_model)


class _Free:
    """Cached free propagation for one system."""

    def __init__(self, system: SpinSystem):
        H = free_hamiltonian(system)
        self.H = H
        self.diagonal = system.coupling_model is CouplingModel.WEAK_ZZ
        if self.diagonal:
            self.w = np.real(np.diag(H))
        else:
            self.w, self.V = np.linalg.eigh(H)

    def apply(self, U: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return U
        if self.diagonal:
            return np.exp(-1j * self.w * t)[:, None] * U
        return (self.V * np.exp(-1j * self.w * t)) @ (self.V.conj().T @ U)


def _ideal_segment(seg: Schedule, system: SpinSystem, opts: SimOptions, free: _Free) -> np.ndarray:
    U = np.eye(system.dim, dtype=complex)
    now = 0.0
    flip = math.pi * (1 + opts.miscalibration)
    for e in seg.sorted().events:
        t = seg.seconds(e.time)
        U = free.apply(U, t - now)
        now = t
        if isinstance(e, SoftPi):
            U = selective_pulse(system, e.spin, flip, e.phase) @ U
        elif isinstance(e, HardPulse):
            U = hard_pulse(system, e.angle, e.phase) @ U
    return free.apply(U, seg.total_seconds - now)


# ------------------------------------------------------------------ finite

@dataclass
class _Window:
    start: float
    stop: float
    center: float
    fields: list  # (ShapedPulse, phase offset)


def max_frequency_scale(system: SpinSystem, pulses: Iterable[ShapedPulse] = ()) -> float:
    scales = [abs(d) for d in system.delta] + [abs(j) for row in system.J for j in row]
    for p in pulses:
        scales += [abs(p.carrier_offset), p.peak_amplitude]
    return max(scales + [1e-300])


def _windows(seg: Schedule, system: SpinSystem, opts: SimOptions) -> list:
    template = opts.pulse_template.scaled(1 + opts.miscalibration)
    d = template.duration
    ghosts = [e for e in seg.events if isinstance(e, Ghost)]
    out = []
    for e in seg.soft_pulses:
        c = seg.seconds(e.time)
        fields = [(template.retarget(e.spin, system.delta[e.spin]), e.phase)]
        if opts.ghost_compensation:
            for g in ghosts:
                if g.time == e.time and g.mirror_of_spin == e.spin:
                    off = 2 * g.at_spin_offset - system.delta[e.spin]
                    fields.append((template.retarget(None, off), e.phase))
        out.append(_Window(c - d / 2, c + d / 2, c, fields))
    if opts.ghost_compensation:
        for g in ghosts:
            if not any(e.time == g.time and e.spin == g.mirror_of_spin for e in seg.soft_pulses):
                raise SimulationError(f"ghost at {g.time}tau mirrors no soft pulse")
    out.sort(key=lambda w: w.start)
    eps = 1e-12 * max(1.0, seg.total_seconds)
    for a, b in zip(out, out[1:]):
        if b.start < a.stop - eps:
            raise SimulationError(
                f"soft pulses at {a.center:.6g}s and {b.center:.6g}s overlap "
                f"(pulse length {d:.6g}s); simultaneous soft pulses are not allowed")
    for w in out:
        if w.start < -eps or w.stop > seg.total_seconds + eps:
            raise SimulationError(f"soft pulse centred at {w.center:.6g}s sticks out of the segment")
    for e in seg.events:
        if isinstance(e, HardPulse):
            t = seg.seconds(e.time)
            if any(w.start + eps < t < w.stop - eps for w in out):
                raise SimulationError(f"hard pulse at {t:.6g}s falls inside a soft pulse")
    return out


def _chain(stack: np.ndarray) -> np.ndarray:
    """Time-ordered product ``stack[-1] @ ... @ stack[0]`` by pairwise reduction."""
    while len(stack) > 1:
        if len(stack) % 2:
            stack = np.concatenate([stack, np.eye(stack.shape[1])[None].astype(complex)])
        stack = stack[1::2] @ stack[0::2]
    return stack[0]


def _window_unitary(w: _Window, system: SpinSystem, H0: np.ndarray, dt: float) -> np.ndarray:
    n = system.n_spins
    Fx = sum(embed(n, {k: SPIN_HALF["Ix"]}) for k in range(n))
    Fy = sum(embed(n, {k: SPIN_HALF["Iy"]}) for k in range(n))
    pulse = w.fields[0][0]
    ns = pulse.n_samples
    per_sample = max(1, math.ceil(pulse.duration / ns / dt))
    m = ns * per_sample
    h = pulse.duration / m
    tm = (np.arange(m) + 0.5) * h  # slice midpoints from window start
    rel = w.start + tm - w.center
    sample = np.arange(m) // per_sample
    cx = np.zeros(m)
    cy = np.zeros(m)
    for p, ph0 in w.fields:
        amp = np.asarray(p.amplitudes)[sample]
        phi = ph0 + np.asarray(p.phases)[sample] + 2 * np.pi * p.carrier_offset * rel
        cx += 2 * np.pi * amp * np.cos(phi)
        cy += 2 * np.pi * amp * np.sin(phi)
    out = np.eye(system.dim, dtype=complex)
    chunk = max(1, 2**20 // system.dim**2)
    for s in range(0, m, chunk):
        Hs = H0[None] + cx[s:s + chunk, None, None] * Fx + cy[s:s + chunk, None, None] * Fy
        ev, V = np.linalg.eigh(Hs)
        Us = (V * np.exp(-1j * ev * h)[:, None, :]) @ np.conj(np.swapaxes(V, 1, 2))
        out = _chain(Us) @ out
    return out


def default_dt(system: SpinSystem, pulses: Iterable[ShapedPulse]) -> float:
    return 1.0 / (50 * max_frequency_scale(system, pulses))


def _finite_segment(seg: Schedule, system: SpinSystem, opts: SimOptions, free: _Free) -> np.ndarray:
    windows = _windows(seg, system, opts)
    pulses = [p for w in windows for p, _ in w.fields]
    scale = max_frequency_scale(system, pulses)
    dt = opts.dt if opts.dt is not None else default_dt(system, pulses)
    if dt > 1.0 / (10 * scale):
        raise SimulationError(
            f"dt={dt:g}s is too coarse for the fastest frequency {scale:g} Hz "
            f"(limit {1 / (10 * scale):g}s)")
    # timeline of instantaneous hard pulses and soft windows
    items = [(seg.seconds(e.time), 0, e) for e in seg.events if isinstance(e, HardPulse)]
    order = {id(e): i for i, e in enumerate(seg.sorted().events)}
    items.sort(key=lambda x: (x[0], order[id(x[2])]))
    timeline = [(w.start, 1, w) for w in windows] + items
    timeline.sort(key=lambda x: x[0])
    U = np.eye(system.dim, dtype=complex)
    now = 0.0
    for t, kind, obj in timeline:
        U = free.apply(U, max(0.0, t - now))
        if kind == 1:
            U = _window_unitary(obj, system, free.H, dt) @ U
            now = obj.stop
        else:
            U = hard_pulse(system, obj.angle, obj.phase) @ U
            now = max(now, t)
    return free.apply(U, max(0.0, seg.total_seconds - now))


def simulate_unitary(schedule, system: SpinSystem, opts: SimOptions | None = None) -> np.ndarray:
    """Total propagator of a schedule, or of a list of segments applied in order."""
    opts = opts or SimOptions()
    segments = [schedule] if isinstance(schedule, Schedule) else list(schedule)
    system = _system_for(system, opts)
    free = _Free(system)
    U = np.eye(system.dim, dtype=complex)
    for seg in segments:
        bad = [v for v in validate(seg, system.n_spins) if v.rule in ("spin_range", "duration")]
        if bad:
            raise SimulationError("; ".join(str(v) for v in bad))
        if opts.mode == "ideal":
            U = _ideal_segment(seg, system, opts, free) @ U
        else:
            U = _finite_segment(seg, system, opts, free) @ U
    return U


# -------------------------------------------------------------- spectators

def random_product_states(n_spins: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` random pure product states as rows, Haar-random on each spin."""
    v = rng.normal(size=(count, n_spins, 2)) + 1j * rng.normal(size=(count, n_spins, 2))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    psis = np.ones((count, 1), dtype=complex)
    for k in range(n_spins):
        psis = (psis[:, :, None] * v[:, k, None, :]).reshape(count, -1)
    return psis


def random_product_state(n_spins: int, rng: np.random.Generator) -> np.ndarray:
    return random_product_states(n_spins, 1, rng)[0]


def _reduced_batch(psis: np.ndarray, n_spins: int, keep: int) -> np.ndarray:
    """Reduced 2x2 states of spin ``keep`` for a batch of pure states (rows)."""
    t = psis.reshape(len(psis), 2**keep, 2, 2 ** (n_spins - keep - 1))
    return np.einsum("bpis,bpjs->bij", t, t.conj())


def spectator_deviation_of(U: np.ndarray, n_spins: int, spectator: int,
                           trials: int = 100, seed: int = 0) -> float:
    """Worst trace distance of the spectator's reduced state, before vs after ``U``."""
    if trials <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    psis = random_product_states(n_spins, trials, rng)
    before = _reduced_batch(psis, n_spins, spectator)
    after = _reduced_batch(psis @ U.T, n_spins, spectator)
    w = np.linalg.eigvalsh(after - before)
    return float(np.max(0.5 * np.abs(w).sum(axis=1)))


def spectator_deviation(schedule, system: SpinSystem, opts: SimOptions | None,
                        spectator, trials: int = 100, seed: int = 0) -> float:
    """Worst trace distance of one spin's reduced state over random product inputs."""
    k = system.index(spectator)
    U = simulate_unitary(schedule, system, opts)
    return spectator_deviation_of(U, system.n_spins, k, trials, seed)


# ----------------------------------------------------------- Bloch-Siegert

def neighbour_phase_error(system: SpinSystem, pulsed, observed, opts: SimOptions,
                          ghost: bool = False) -> float:
    """Extra z-rotation (rad) of ``observed`` caused by one soft pulse.

    A single shaped pi pulse on ``pulsed`` is simulated in finite mode and
    compared with the ideal instantaneous pulse at the same centre. With
    ``W = U_ideal^dagger U_finite``, the z-phase of spin b is read from
    ``W[c,down] * conj(W[c,up])`` summed over the basis states c of the
    other spins. Positive means the neighbour precessed faster, i.e. its
    resonance moved up in frequency.
    """
    a = system.index(pulsed)
    b = system.index(observed)
    d = opts.pulse_template.duration
    events = [SoftPi(Fraction(1, 2), a, 90.0)]
    if ghost:
        events.append(Ghost(Fraction(1, 2), a, system.delta[b]))
    seg = Schedule(d, 1, events)
    fin = SimOptions("finite", opts.dt, opts.coupling_model, opts.miscalibration, ghost, opts.envelope)
    U = simulate_unitary(seg, system, fin)
    U0 = simulate_unitary(seg, system, SimOptions("ideal", coupling_model=opts.coupling_model))
    W = U0.conj().T @ U
    n = system.n_spins
    bit = 1 << (n - 1 - b)
    up = [i for i in range(system.dim) if not i & bit]
    acc = sum(W[i | bit, i | bit] * np.conj(W[i, i]) for i in up)
    return float(np.angle(acc))
