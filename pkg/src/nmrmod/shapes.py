"""Shaped soft-pulse envelopes.

Tables are plain text: a header ``duration=<s> carrier_offset=<Hz>`` followed
by one ``amplitude_hz phase_deg`` pair per line, uniformly spaced in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ShapedPulse:
    duration: float
    carrier_offset: float
    amplitudes: tuple  # Hz, one per sample
    phases: tuple  # radians, one per sample
    target_spin: int | None = None

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        phs = tuple(float(p) for p in self.phases)
        if not amps:
            raise ValueError("envelope must have at least one sample")
        if len(amps) != len(phs):
            raise ValueError("amplitude and phase tables differ in length")
        if not all(math.isfinite(a) for a in amps + phs):
            raise ValueError("envelope samples must be finite")
        if not self.duration > 0:
            raise ValueError(f"pulse duration must be positive, got {self.duration}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", phs)
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "carrier_offset", float(self.carrier_offset))

    @property
    def n_samples(self) -> int:
        return len(self.amplitudes)

    @property
    def peak_amplitude(self) -> float:
        return max(abs(a) for a in self.amplitudes)

    def flip_angle(self) -> float:
        """On-resonance nutation angle of the envelope (radians), ignoring phase."""
        return 2 * math.pi * sum(self.amplitudes) * self.duration / self.n_samples

    def is_time_symmetric(self, atol: float = 1e-12) -> bool:
        a = np.asarray(self.amplitudes)
        p = np.asarray(self.phases)
        return bool(np.allclose(a, a[::-1], rtol=0, atol=atol)
                    and np.allclose(p, p[::-1], rtol=0, atol=atol))

    def scaled(self, factor: float) -> "ShapedPulse":
        return replace(self, amplitudes=tuple(a * factor for a in self.amplitudes))

    def calibrated(self, angle: float = math.pi) -> "ShapedPulse":
        return self.scaled(angle / self.flip_angle())

    def retarget(self, spin: int | None, carrier_offset: float) -> "ShapedPulse":
        return replace(self, target_spin=spin, carrier_offset=carrier_offset)


def gaussian_envelope(duration: float, n_samples: int = 256, truncation: float = 2.5,
                      angle: float = math.pi) -> ShapedPulse:
    """Truncated Gaussian calibrated to ``angle``; symmetric about its centre.

    ``truncation`` is the half-width in standard deviations.
    """
    x = (np.arange(n_samples) + 0.5) / n_samples * 2 - 1
    a = np.exp(-0.5 * (truncation * x) ** 2)
    a = 0.5 * (a + a[::-1])
    pulse = ShapedPulse(duration, 0.0, tuple(a), (0.0,) * n_samples)
    return pulse.calibrated(angle)


# Fourier cosine coefficients of the RE-BURP band-selective refocusing pulse
# (Geen and Freeman, J. Magn. Reson. 93, 93 (1991)); the pulse is time-symmetric.
REBURP_A = (0.49, -1.02, 1.11, -1.57, 0.83, -0.42, 0.26, -0.16,
            0.10, -0.07, 0.04, -0.03, 0.01, -0.02, 0.00, -0.01)


def reburp_envelope(duration: float, n_samples: int = 256, angle: float = math.pi) -> ShapedPulse:
    """RE-BURP refocusing envelope, area-calibrated to ``angle``.

    The amplitude is ``(1/T) sum_n A_n cos(2 pi n t / T)`` Hz; negative
    values are a 180 degree phase inversion. It refocuses a band of roughly
    ``+-2/T`` Hz around the carrier and leaves resonances beyond about
    ``4/T`` Hz alone.
    """
    t = (np.arange(n_samples) + 0.5) / n_samples
    a = sum(c * np.cos(2 * np.pi * n * t) for n, c in enumerate(REBURP_A)) / duration
    a = 0.5 * (a + a[::-1])
    pulse = ShapedPulse(duration, 0.0, tuple(a), (0.0,) * n_samples)
    return pulse.calibrated(angle)


def load_table(path) -> ShapedPulse:
    lines = [l.split("#", 1)[0].strip() for l in Path(path).read_text().splitlines()]
    lines = [l for l in lines if l]
    if not lines:
        raise ValueError(f"{path}: empty pulse table")
    head = dict(tok.split("=", 1) for tok in lines[0].split())
    try:
        duration = float(head["duration"])
        offset = float(head.get("carrier_offset", 0.0))
    except KeyError:
        raise ValueError(f"{path}: header must carry duration=<s>") from None
    amps, phs = [], []
    for i, line in enumerate(lines[1:], start=2):
        cols = line.split()
        if len(cols) != 2:
            raise ValueError(f"{path}: row {i} needs 'amplitude_hz phase_deg'")
        amps.append(float(cols[0]))
        phs.append(math.radians(float(cols[1])))
    return ShapedPulse(duration, offset, tuple(amps), tuple(phs))


def save_table(pulse: ShapedPulse, path) -> None:
    rows = [f"duration={pulse.duration!r} carrier_offset={pulse.carrier_offset!r}"]
    rows += [f"{a!r} {math.degrees(p)!r}" for a, p in zip(pulse.amplitudes, pulse.phases)]
    Path(path).write_text("\n".join(rows) + "\n")
