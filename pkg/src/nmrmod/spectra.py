"""FID synthesis, spectra and the phase-step experiments.

Signals are ``tr(rho(t) sum_k I_k+)`` under free evolution; with the
``exp(-iHt)`` convention a spin at +delta Hz shows up at +delta Hz. Every
observable is first computed as an *analytic* line list (transition
frequency and complex amplitude from the eigenstructure of the free
Hamiltonian); the FID and the gridded spectrum are derived from it, and
phases used for checks are read from the analytic amplitudes.
"""

from __future__ import annotations

import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .algebra import SPIN_HALF, CouplingModel, SpinSystem, embed, free_hamiltonian, hard_pulse
from .compiler import o1_schedule, o3_schedule
from .dynamics import DensityState, SimOptions, evolve_density, simulate_unitary


@dataclass(frozen=True)
class Line:
    frequency: float  # Hz
    amplitude: complex
    spin: int
    partners: tuple  # ((spin, m), ...) states of the other spins, m = +-0.5

    def partner_state(self, spin: int) -> float:
        return dict(self.partners)[spin]


@dataclass
class LineList:
    lines: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)  # groups of merged frequencies

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def for_spin(self, spin: int) -> list:
        return [l for l in self.lines if l.spin == spin]

    def total(self, spin: int, partners: dict | None = None) -> complex:
        sel = [l for l in self.lines if l.spin == spin]
        for k, m in (partners or {}).items():
            sel = [l for l in sel if l.partner_state(k) == m]
        return complex(sum(l.amplitude for l in sel))

    def phase(self, spin: int, partners: dict | None = None) -> float:
        return float(np.angle(self.total(spin, partners)))


@dataclass(frozen=True)
class Fid:
    samples: np.ndarray
    dwell: float
    apodization_T2star: float | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.size == 0:
            raise ValueError("an FID needs at least one sample")
        if not self.dwell > 0:
            raise ValueError("dwell must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dwell


@dataclass
class Spectrum:
    freqs: np.ndarray  # Hz, ascending
    values: np.ndarray  # dwell * DFT, so sum |values|^2 df = sum |fid|^2 dwell
    lines: LineList

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 else 0.0


def _observable(system: SpinSystem) -> np.ndarray:
    n = system.n_spins
    plus = SPIN_HALF["Ix"] + 1j * SPIN_HALF["Iy"]
    return sum(embed(n, {k: plus}) for k in range(n))


def _eigen(system: SpinSystem):
    H = free_hamiltonian(system)
    if system.coupling_model is CouplingModel.WEAK_ZZ:
        return np.real(np.diag(H)), np.eye(system.dim, dtype=complex)
    return np.linalg.eigh(H)


def _assign(system: SpinSystem, V: np.ndarray, a: int, b: int):
    """Spin and partner states of the transition a <-> b."""
    n = system.n_spins
    plus = SPIN_HALF["Ix"] + 1j * SPIN_HALF["Iy"]
    weights = [abs((V.conj().T @ embed(n, {k: plus}) @ V)[b, a]) for k in range(n)]
    k = int(np.argmax(weights))
    # dominant computational basis state of the upper level a
    ca = int(np.argmax(np.abs(V[:, a])))
    partners = tuple((j, 0.5 - ((ca >> (n - 1 - j)) & 1)) for j in range(n) if j != k)
    return k, partners


def analytic_lines(rho, system: SpinSystem, rtol: float = 1e-12) -> LineList:
    """Exact line list of the free-induction signal of ``rho``."""
    rho = rho.matrix if isinstance(rho, DensityState) else np.asarray(rho)
    w, V = _eigen(system)
    r = V.conj().T @ rho @ V
    O = V.conj().T @ _observable(system) @ V
    amp = r * O.T  # amp[a, b] = r_ab O_ba, oscillating as exp(-i (w_a - w_b) t)
    scale = float(np.max(np.abs(amp), initial=0.0))
    lines = []
    if scale == 0:
        return LineList([])
    for a, b in zip(*np.nonzero(np.abs(amp) > rtol * scale)):
        f = (w[b] - w[a]) / (2 * np.pi)
        k, partners = _assign(system, V, int(a), int(b))
        lines.append(Line(float(f), complex(amp[a, b]), k, partners))
    lines.sort(key=lambda l: (l.spin, l.frequency))
    return LineList(lines)


def transition_frequencies(system: SpinSystem) -> list:
    """Frequencies (Hz) of all single-quantum lines the detector can see."""
    w, V = _eigen(system)
    O = V.conj().T @ _observable(system) @ V
    out = []
    for b, a in zip(*np.nonzero(np.abs(O) > 1e-12)):
        out.append(float((w[b] - w[a]) / (2 * np.pi)))
    return sorted(out)


def detect_fid(rho, system: SpinSystem, n_points: int, dwell: float,
               T2star: float | None = None) -> Fid:
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    lines = analytic_lines(rho, system)
    t = np.arange(n_points) * dwell
    s = np.zeros(n_points, dtype=complex)
    for l in lines:
        s += l.amplitude * np.exp(2j * np.pi * l.frequency * t)
    if T2star is not None:
        s *= np.exp(-t / T2star)
    return Fid(s, dwell, T2star)


def spectrum(fid: Fid, system: SpinSystem | None = None, half_width: int = 2,
             threshold: float = 1e-3) -> Spectrum:
    """DFT of an FID plus a peak-picked line list.

    With a system, lines are integrated at its predicted transition
    frequencies; predicted lines closer than two bins are merged and
    flagged in ``LineList.unresolved``. Without one, local maxima above
    ``threshold`` times the tallest peak are picked.
    """
    N = len(fid.samples)
    vals = fid.dwell * np.fft.fftshift(np.fft.fft(fid.samples))
    freqs = np.fft.fftshift(np.fft.fftfreq(N, fid.dwell))
    df = 1.0 / (N * fid.dwell)
    mag = np.abs(vals)
    out = LineList()
    if N < 2 or not np.any(mag > 0):
        return Spectrum(freqs, vals, out)
    cut = threshold * mag.max()
    nyq = 1.0 / (2 * fid.dwell)

    def integrate(i):
        lo, hi = max(0, i - half_width), min(N, i + half_width + 1)
        return complex(np.sum(vals[lo:hi]) * df)

    if system is not None:
        predicted = sorted({round(f, 9) for f in transition_frequencies(system) if abs(f) < nyq})
        groups: list = []
        for f in predicted:
            if groups and (f - groups[-1][-1]) < 2 * df:
                groups[-1].append(f)
            else:
                groups.append([f])
        for g in groups:
            f = float(np.mean(g))
            i = int(np.argmin(np.abs(freqs - f)))
            if mag[max(0, i - half_width):i + half_width + 1].max() < cut:
                continue
            if len(g) > 1:
                out.unresolved.append(tuple(g))
            out.lines.append(Line(f, integrate(i), -1, ()))
    else:
        for i in range(N):
            left = mag[i - 1] if i > 0 else -1.0
            right = mag[i + 1] if i < N - 1 else -1.0
            if mag[i] >= cut and mag[i] > left and mag[i] >= right:
                out.lines.append(Line(float(freqs[i]), integrate(i), -1, ()))
    return Spectrum(freqs, vals, out)


# -------------------------------------------------------- experiments

def _wrap(x: float) -> float:
    """Angle in [0, 2pi); values a rounding error below 2pi snap to 0."""
    y = float(x % (2 * math.pi))
    return 0.0 if 2 * math.pi - y < 1e-12 else y


@dataclass
class SweepRow:
    step: int
    tau8_s: float
    phases: dict  # label -> phase relative to the preparation, [0, 2pi)
    components: dict = field(default_factory=dict)  # (label, partner label, m) -> phase


def prepare_x_pulsed(system: SpinSystem, axis_phase: float = 0.0) -> DensityState:
    """z-polarised state after a hard pi/2 pulse about the in-plane axis at ``axis_phase``."""
    return evolve_density(DensityState.z_polarized(system), hard_pulse(system, math.pi / 2, axis_phase))


def _relative_phases(before: LineList, after: LineList, system: SpinSystem) -> dict:
    out = {}
    for k, lab in enumerate(system.labels):
        out[lab] = _wrap(np.angle(after.total(k)) - np.angle(before.total(k)))
    return out


def default_fig3_base(delta: float, near: float = 1.15) -> float:
    """Whole-turn duration of the shift module closest to ``near`` seconds."""
    turns = max(1, round(near * abs(delta)))
    return turns / abs(delta)


def run_fig3(system: SpinSystem, steps: int = 5, active="I", base_duration: float | None = None,
             opts: SimOptions | None = None) -> list:
    """Shift-module phase sweep: total duration stepped for pi/2 phase steps."""
    k = system.index(active)
    d = system.delta[k]
    if d == 0:
        raise ValueError(f"spin {system.labels[k]} has zero offset; no phase to sweep")
    base = default_fig3_base(d) if base_duration is None else base_duration
    step = 1.0 / (4 * abs(d))
    prep = prepare_x_pulsed(system, 0.0)
    before = analytic_lines(prep, system)
    rows = []
    for i in range(steps):
        T = base + i * step
        U = simulate_unitary(o1_schedule(system, k, T), system, opts)
        after = analytic_lines(evolve_density(prep, U), system)
        rows.append(SweepRow(i, T, _relative_phases(before, after, system)))
    return rows


def run_fig5(system: SpinSystem, steps: int = 5, pair=("I", "S"),
             opts: SimOptions | None = None) -> list:
    """Coupling-module sweep: duration stepped for pi/2 steps of line divergence.

    Each active spin's multiplet is split by the partner's state; the
    ``phases`` entry for an active spin is the component with the partner
    spin-up (alpha), which advances by ``8 pi tau J``; the beta component
    moves the opposite way. ``components`` holds both.
    """
    a, b = (system.index(p) for p in pair)
    J = system.J_matrix[a, b]
    if J == 0:
        raise ValueError("the pair is uncoupled; no divergence to sweep")
    prep = prepare_x_pulsed(system, math.pi)  # about -x: z -> +y
    before = analytic_lines(prep, system)
    rows = []
    for i in range(steps):
        T = float(i / (2 * abs(J)))
        if T == 0:
            U = np.eye(system.dim, dtype=complex)
        else:
            U = simulate_unitary(o3_schedule(system, (a, b), T), system, opts)
        after = analytic_lines(evolve_density(prep, U), system)
        phases = _relative_phases(before, after, system)
        comps = {}
        for x, y in ((a, b), (b, a)):
            for m in (0.5, -0.5):
                p = np.angle(after.total(x, {y: m})) - np.angle(before.total(x, {y: m}))
                comps[(system.labels[x], system.labels[y], m)] = _wrap(p)
            phases[system.labels[x]] = comps[(system.labels[x], system.labels[y], 0.5)]
        rows.append(SweepRow(i, T, phases, comps))
    return rows


# ---------------------------------------------------------------- CSV

def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def spectrum_csv(spec: Spectrum) -> str:
    buf = io.StringIO()
    buf.write("freq_hz,re,im\n")
    for f, v in zip(spec.freqs, spec.values):
        buf.write(f"{float(f)!r},{float(v.real)!r},{float(v.imag)!r}\n")
    return buf.getvalue()


def sweep_csv(rows: Sequence[SweepRow], labels: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write("step,tau8_s," + ",".join(f"phase_{l}_rad" for l in labels) + "\n")
    for r in rows:
        buf.write(f"{r.step},{float(r.tau8_s)!r}," + ",".join(repr(float(r.phases[l])) for l in labels) + "\n")
    return buf.getvalue()
