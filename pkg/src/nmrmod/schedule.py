"""Pulse-schedule intermediate representation.

A :class:`Schedule` is a set of instantaneous events on an exact rational
grid of ``tau``. Event times and the total duration are stored as
:class:`fractions.Fraction` multiples of ``tau``; seconds only appear when a
schedule is simulated. Pulse angles and phases are stored in degrees so the
text format round-trips bit-exactly.

Text format (one segment)::

    tau=0.14375 duration=8tau
    t=1tau soft_pi spin=R phase=90.0
    t=2tau soft_pi spin=S phase=90.0
    t=2tau ghost mirror=S at=201.0
    t=4tau hard angle=180.0 phase=0.0

A file may hold several segments (applied in order); each starts with its
own ``tau=`` header. ``#`` comments and blank lines are ignored, and a single
``target: ...`` line carries the module target for ``verify``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union


class ScheduleError(ValueError):
    pass


class ScheduleParseError(ScheduleError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _frac(t) -> Fraction:
    f = Fraction(t)
    if f < 0:
        raise ScheduleError(f"event time must be nonnegative, got {t}")
    return f


@dataclass(frozen=True)
class SoftPi:
    """Selective pi pulse on one spin about the in-plane axis at ``phase_deg``."""

    time: Fraction
    spin: int
    phase_deg: float = 90.0

    def __post_init__(self):
        object.__setattr__(self, "time", _frac(self.time))
        object.__setattr__(self, "phase_deg", float(self.phase_deg))

    @property
    def phase(self) -> float:
        return math.radians(self.phase_deg)


@dataclass(frozen=True)
class HardPulse:
    """Non-selective instantaneous pulse on every spin."""

    time: Fraction
    angle_deg: float = 180.0
    phase_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "time", _frac(self.time))
        object.__setattr__(self, "angle_deg", float(self.angle_deg))
        object.__setattr__(self, "phase_deg", float(self.phase_deg))

    @property
    def angle(self) -> float:
        return math.radians(self.angle_deg)

    @property
    def phase(self) -> float:
        return math.radians(self.phase_deg)


@dataclass(frozen=True)
class Ghost:
    """Compensating field that mirrors the soft pulse on ``mirror_of_spin``.

    The field has the same envelope, amplitude and phase as the mirrored
    pulse but sits at ``2 * at_spin_offset - delta[mirror_of_spin]``, i.e.
    with its offset from the protected resonance reversed in sign. Only the
    finite-pulse simulator acts on ghosts.
    """

    time: Fraction
    mirror_of_spin: int
    at_spin_offset: float

    def __post_init__(self):
        object.__setattr__(self, "time", _frac(self.time))
        object.__setattr__(self, "at_spin_offset", float(self.at_spin_offset))


PulseEvent = Union[SoftPi, HardPulse, Ghost]


@dataclass(frozen=True)
class Schedule:
    """Time-ordered pulse events over ``[0, duration * tau]``.

    ``refocusing=False`` marks a schedule that intentionally leaves some spin
    with an odd number of soft pulses.
    """

    tau: float
    duration: Fraction
    events: tuple = ()
    refocusing: bool = True

    def __post_init__(self):
        tau = float(self.tau)
        if not (tau > 0 and math.isfinite(tau)):
            raise ScheduleError(f"tau must be a positive number of seconds, got {self.tau}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "duration", _frac(self.duration))
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def total_seconds(self) -> float:
        return float(self.duration) * self.tau

    def seconds(self, t: Fraction) -> float:
        return float(t) * self.tau

    @property
    def soft_pulses(self) -> list:
        return [e for e in self.events if isinstance(e, SoftPi)]

    @property
    def phase_cycle(self) -> dict:
        """Soft-pulse phases (degrees) per spin, in time order."""
        out: dict = {}
        for e in self.soft_pulses:
            out.setdefault(e.spin, []).append(e.phase_deg)
        return out

    def times_of(self, spin: int) -> list:
        return [e.time for e in self.soft_pulses if e.spin == spin]

    def sorted(self) -> "Schedule":
        # stable: same-time events keep their listed order
        ev = sorted(self.events, key=lambda e: e.time)
        return Schedule(self.tau, self.duration, ev, self.refocusing)

    def time_reversed(self) -> "Schedule":
        ev = [_retime(e, self.duration - e.time) for e in reversed(self.events)]
        return Schedule(self.tau, self.duration, ev, self.refocusing)


def _retime(e, t):
    if isinstance(e, SoftPi):
        return SoftPi(t, e.spin, e.phase_deg)
    if isinstance(e, HardPulse):
        return HardPulse(t, e.angle_deg, e.phase_deg)
    return Ghost(t, e.mirror_of_spin, e.at_spin_offset)


@dataclass(frozen=True)
class Violation:
    rule: str
    times: tuple
    message: str

    def __str__(self):
        return f"{self.rule}: {self.message}"


def validate(schedule: Schedule, n_spins: int | None = None) -> list:
    """Check the schedule invariants; violations are returned, never raised."""
    out = []
    ev = schedule.events
    for a, b in zip(ev, ev[1:]):
        if b.time < a.time:
            out.append(Violation("order", (a.time, b.time),
                                 f"event at {fmt_time(b.time)} listed after {fmt_time(a.time)}"))
    if ev and max(e.time for e in ev) > schedule.duration:
        late = max(e.time for e in ev)
        out.append(Violation("duration", (late,),
                             f"event at {fmt_time(late)} beyond duration {fmt_time(schedule.duration)}"))
    by_time: dict = {}
    for e in schedule.soft_pulses:
        by_time.setdefault(e.time, set()).add(e.spin)
    for t in sorted(by_time):
        if len(by_time[t]) > 1:
            spins = sorted(by_time[t])
            out.append(Violation("tsetse", (t,),
                                 f"soft pulses on spins {spins} coincide at {fmt_time(t)}"))
    if n_spins is not None:
        for e in ev:
            s = e.spin if isinstance(e, SoftPi) else getattr(e, "mirror_of_spin", None)
            if s is not None and not 0 <= s < n_spins:
                out.append(Violation("spin_range", (e.time,),
                                     f"spin index {s} out of range at {fmt_time(e.time)}"))
    if schedule.refocusing:
        counts: dict = {}
        for e in schedule.soft_pulses:
            counts[e.spin] = counts.get(e.spin, 0) + 1
        for s in sorted(counts):
            if counts[s] % 2:
                times = tuple(schedule.times_of(s))
                out.append(Violation("odd_echo", times,
                                     f"spin {s} receives {counts[s]} soft pulses (odd) "
                                     "and the schedule is not flagged non-refocusing"))
    return out


def mlev4_phases(count: int) -> list:
    """Soft-pulse phases (radians) for ``count`` refocusing pulses on one spin.

    Two pulses share the +y phase; four or more follow the MLEV-4 block
    (+y, +y, -y, -y) repeated.
    """
    if count < 0 or count % 2:
        raise ValueError(f"MLEV-4 phases need an even pulse count, got {count}")
    if count == 2:
        return [math.pi / 2, math.pi / 2]
    block = [math.pi / 2, math.pi / 2, 3 * math.pi / 2, 3 * math.pi / 2]
    return [block[i % 4] for i in range(count)]


# ---------------------------------------------------------------- text format

def fmt_time(t: Fraction) -> str:
    t = Fraction(t)
    if t.denominator == 1:
        return f"{t.numerator}tau"
    return f"{t.numerator}/{t.denominator}tau"


def _parse_time(s: str) -> Fraction:
    if not s.endswith("tau"):
        raise ValueError(f"time {s!r} must end in 'tau'")
    body = s[:-3]
    if not re.fullmatch(r"\d+(/\d+)?", body):
        raise ValueError(f"bad time {s!r}")
    return Fraction(body)


def dumps_segment(schedule: Schedule, labels: Sequence[str]) -> str:
    head = f"tau={schedule.tau!r} duration={fmt_time(schedule.duration)}"
    if not schedule.refocusing:
        head += " refocusing=no"
    lines = [head]
    for e in schedule.events:
        t = f"t={fmt_time(e.time)}"
        if isinstance(e, SoftPi):
            lines.append(f"{t} soft_pi spin={labels[e.spin]} phase={e.phase_deg!r}")
        elif isinstance(e, HardPulse):
            lines.append(f"{t} hard angle={e.angle_deg!r} phase={e.phase_deg!r}")
        else:
            lines.append(f"{t} ghost mirror={labels[e.mirror_of_spin]} at={e.at_spin_offset!r}")
    return "\n".join(lines) + "\n"


@dataclass
class ScheduleFile:
    segments: list = field(default_factory=list)
    target: str | None = None


def dumps(segments, labels: Sequence[str], target: str | None = None) -> str:
    if isinstance(segments, Schedule):
        segments = [segments]
    parts = []
    if target is not None:
        parts.append(f"target: {target}\n")
    parts.extend(dumps_segment(s, labels) for s in segments)
    return "".join(parts)


def _kv(tokens, lineno, allowed):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScheduleParseError(lineno, f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k not in allowed:
            raise ScheduleParseError(lineno, f"unexpected key {k!r}")
        if k in out:
            raise ScheduleParseError(lineno, f"duplicate key {k!r}")
        out[k] = v
    missing = [k for k in allowed if k not in out and k != "refocusing"]
    if missing:
        raise ScheduleParseError(lineno, f"missing key(s) {missing}")
    return out


def _label(labels, name, lineno):
    try:
        return list(labels).index(name)
    except ValueError:
        raise ScheduleParseError(lineno, f"unknown spin label {name!r}") from None


def loads(text: str, labels: Sequence[str]) -> ScheduleFile:
    """Parse schedule text; spin labels are resolved against ``labels``."""
    sf = ScheduleFile()
    head = None
    events: list = []

    def close():
        if head is not None:
            sf.segments.append(Schedule(head[0], head[1], events.copy(), head[2]))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("target:"):
            if sf.target is not None:
                raise ScheduleParseError(lineno, "duplicate target line")
            sf.target = line[len("target:"):].strip()
            continue
        tokens = line.split()
        try:
            if tokens[0].startswith("tau="):
                close()
                kv = _kv(tokens, lineno, ("tau", "duration", "refocusing"))
                if kv.get("refocusing", "yes") not in ("yes", "no"):
                    raise ScheduleParseError(lineno, "refocusing must be yes or no")
                head = (float(kv["tau"]), _parse_time(kv["duration"]),
                        kv.get("refocusing", "yes") == "yes")
                events = []
                continue
            if head is None:
                raise ScheduleParseError(lineno, "event before any 'tau=' header")
            if not tokens[0].startswith("t=") or len(tokens) < 2:
                raise ScheduleParseError(lineno, f"cannot parse {line!r}")
            t = _parse_time(tokens[0][2:])
            kind = tokens[1]
            if kind == "soft_pi":
                kv = _kv(tokens[2:], lineno, ("spin", "phase"))
                events.append(SoftPi(t, _label(labels, kv["spin"], lineno), float(kv["phase"])))
            elif kind == "hard":
                kv = _kv(tokens[2:], lineno, ("angle", "phase"))
                events.append(HardPulse(t, float(kv["angle"]), float(kv["phase"])))
            elif kind == "ghost":
                kv = _kv(tokens[2:], lineno, ("mirror", "at"))
                events.append(Ghost(t, _label(labels, kv["mirror"], lineno), float(kv["at"])))
            else:
                raise ScheduleParseError(lineno, f"unknown event kind {kind!r}")
        except ScheduleParseError:
            raise
        except ValueError as exc:
            raise ScheduleParseError(lineno, str(exc)) from None
    close()
    return sf
