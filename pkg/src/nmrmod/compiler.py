"""Compile refocusing modules and gate-level composites.

Every module is verified before it is returned: its ideal-pulse propagator
(weak coupling) must match the target unitary up to a global phase.

Timing rules
------------
Spectators are assigned nesting levels ``j = 1 .. m``: level j receives soft
pi pulses at ``(2^j i + 2^(j-1)) tau``. The *last* spectator in system order
gets level 1 (pulses at odd tau), the first gets the highest level, so the
three-spin I-active module pulses R at tau, 3tau, 5tau, 7tau and S at 2tau,
6tau.

- shift module (one active spin): duration ``2^(m+1) tau`` with m = n - 1.
- coupling module (active pair): duration ``2^(m+2) tau`` with m = n - 2 and
  hard pi pulses at a quarter and three quarters of the duration.
- do-nothing: the shift module of spin 0 plus hard pi pulses at half and
  full duration.

Free evolution under ``exp(-iHt)`` gives the active shift ``exp(-i 2 pi delta
T I_z)``, so a target ``exp(+i phi I_z)`` needs ``2 pi delta T = -phi`` mod
2 pi (likewise ``pi J T = -theta`` for ``exp(+i theta 2 I_z S_z)``). The
shortest positive duration is used; a zero phase takes one full period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gates
from .algebra import CouplingModel, SpinSystem, canonical_phase, phase_invariant_fidelity
from .dynamics import SimOptions, simulate_unitary
from .schedule import Ghost, HardPulse, Schedule, SoftPi, dumps, mlev4_phases, validate
from .toggling import TogglingInapplicable, bloch_siegert_exposure, toggling_analysis

FIDELITY_GATE = 1e-10


class CompileError(ValueError):
    pass


class VerificationError(CompileError):
    """A compiled schedule missed its target (fidelity gate or validation rules)."""


@dataclass
class Report:
    fidelity: float
    toggling: list  # per segment: ToggleProfile or None when inapplicable
    violations: list
    gate: float = FIDELITY_GATE

    @property
    def passed(self) -> bool:
        return self.fidelity is not None and self.fidelity >= 1 - self.gate and not self.violations


@dataclass
class CompiledModule:
    name: str
    target: str  # text descriptor, parseable by target_unitary()
    segments: list
    target_unitary: np.ndarray
    report: Report
    active: tuple = ()
    parts: list = field(default_factory=list)

    @property
    def schedule(self) -> Schedule:
        if len(self.segments) != 1:
            raise AttributeError(f"{self.name} has {len(self.segments)} segments")
        return self.segments[0]

    @property
    def total_seconds(self) -> float:
        return sum(s.total_seconds for s in self.segments)

    def spectators(self, system: SpinSystem) -> list:
        return [k for k in range(system.n_spins) if k not in self.active]

    def text(self, system: SpinSystem) -> str:
        return dumps(self.segments, system.labels, target=self.target)


# ------------------------------------------------------------ helpers

def _dyadic_levels(system: SpinSystem, active) -> dict:
    spectators = [k for k in range(system.n_spins) if k not in active]
    m = len(spectators)
    return {k: m - i for i, k in enumerate(spectators)}


def _spectator_events(levels: dict, duration: int) -> list:
    events = []
    for spin, j in levels.items():
        times = list(range(2 ** (j - 1), duration, 2**j))
        for t, ph in zip(times, mlev4_phases(len(times))):
            events.append(SoftPi(t, spin, math.degrees(ph)))
    return events


def _ghost_events(events: list, duration: int, system: SpinSystem, active) -> list:
    """Ghost pulses for neighbours whose Bloch-Siegert kicks are not refocused."""
    probe = Schedule(1.0, duration, sorted(events, key=lambda e: e.time))
    exposure = bloch_siegert_exposure(probe, system.n_spins)
    out = []
    for e in probe.soft_pulses:
        for b in range(system.n_spins):
            if b in active or b == e.spin:
                continue
            if exposure.get((e.spin, b), 0) != 0:
                out.append(Ghost(e.time, e.spin, system.delta[b]))
    return out


def _period_fraction(x: float) -> float:
    """``x / 2pi`` reduced to (0, 1]; a zero phase becomes one full period."""
    f = (x / (2 * math.pi)) % 1.0
    return 1.0 if f == 0 or math.isclose(f, 0.0, abs_tol=1e-15) else f


def o1_duration(system: SpinSystem, spin: int, phi: float) -> float:
    d = system.delta[spin]
    if d == 0:
        raise CompileError(
            f"spin {system.labels[spin]} sits on the transmitter (delta = 0 Hz): "
            "its shift phase cannot be set by the module duration")
    return _period_fraction(-phi * math.copysign(1.0, d)) / abs(d)


def o3_duration(system: SpinSystem, pair, theta: float) -> float:
    J = system.J_matrix[pair[0], pair[1]]
    if J == 0:
        raise CompileError(
            f"J between {system.labels[pair[0]]} and {system.labels[pair[1]]} is zero: "
            "the coupling phase cannot be set by the module duration")
    # exp(-i pi J T 2IzSz) has period 2/|J| in T (up to a global phase)
    return 2 * _period_fraction(-theta * math.copysign(1.0, J)) / abs(J)


def o1_schedule(system: SpinSystem, spin, total_seconds: float, ghosts: bool = False) -> Schedule:
    """Shift-evolution schedule of a given total duration."""
    k = system.index(spin)
    n = system.n_spins
    duration = 2**n
    events = _spectator_events(_dyadic_levels(system, (k,)), duration)
    if ghosts:
        events += _ghost_events(events, duration, system, (k,))
    return Schedule(total_seconds / duration, duration, sorted(events, key=lambda e: e.time))


def o3_schedule(system: SpinSystem, pair, total_seconds: float, ghosts: bool = False) -> Schedule:
    a, b = (system.index(p) for p in pair)
    if a == b:
        raise CompileError("coupling module needs two distinct spins")
    n = system.n_spins
    duration = 2**n
    events = _spectator_events(_dyadic_levels(system, (a, b)), duration)
    if ghosts:
        events += _ghost_events(events, duration, system, (a, b))
    events += [HardPulse(duration // 4, 180.0, 0.0), HardPulse(3 * duration // 4, 180.0, 0.0)]
    return Schedule(total_seconds / duration, duration, sorted(events, key=lambda e: e.time))


def _hard_segment(tau: float, angle: float, phase_deg: float) -> Schedule:
    return Schedule(tau, 0, [HardPulse(0, math.degrees(angle), phase_deg)])


def _weak(system: SpinSystem) -> SpinSystem:
    return system.with_coupling_model(CouplingModel.WEAK_ZZ)


def static_checks(segments, system: SpinSystem) -> tuple:
    """Validation violations and per-segment toggling profiles (``None`` if inapplicable)."""
    prof = []
    viol = []
    for seg in segments:
        viol += validate(seg, system.n_spins)
        try:
            prof.append(toggling_analysis(seg, system))
        except TogglingInapplicable:
            prof.append(None)
    return viol, prof


def verify_segments(segments, system: SpinSystem, target: np.ndarray,
                    opts: SimOptions | None = None) -> Report:
    opts = opts or SimOptions("ideal")
    U = simulate_unitary(segments, system, opts)
    viol, prof = static_checks(segments, system)
    return Report(phase_invariant_fidelity(U, target), prof, viol)


def _finish(name, target, segments, U_target, system, active, parts=None) -> CompiledModule:
    report = verify_segments(segments, _weak(system), U_target)
    if not report.passed:
        raise VerificationError(
            f"{name}: verification failed (fidelity {report.fidelity:.15f}, "
            f"violations {[str(v) for v in report.violations]})")
    return CompiledModule(name, target, list(segments), U_target, report, tuple(active), parts or [])


# ------------------------------------------------------------ modules

def compile_o1(system: SpinSystem, active_spin, phi: float, ghosts: bool = False) -> CompiledModule:
    """``exp(+i phi I_z)`` on one spin, every other spin returned to its state."""
    k = system.index(active_spin)
    phi = canonical_phase(phi)
    target = f"o1 spin={system.labels[k]} phi={float(phi)!r}"
    U_t = gates.shift_target(system, k, phi)
    if system.n_spins == 1:
        T = o1_duration(system, k, phi)
        return _finish("o1", target, [Schedule(T / 2, 2, [])], U_t, system, (k,))
    T = o1_duration(system, k, phi)
    return _finish("o1", target, [o1_schedule(system, k, T, ghosts)], U_t, system, (k,))


def compile_do_nothing(system: SpinSystem, total_seconds: float) -> CompiledModule:
    """Identity (up to global phase) for any duration."""
    n = system.n_spins
    duration = 2**n
    if n == 1:
        events = []
    else:
        events = _spectator_events(_dyadic_levels(system, (0,)), duration)
    events += [HardPulse(duration // 2, 180.0, 0.0), HardPulse(duration, 180.0, 0.0)]
    seg = Schedule(total_seconds / duration, duration, sorted(events, key=lambda e: e.time))
    return _finish("nothing", "nothing", [seg], np.eye(system.dim, dtype=complex), system, ())


def compile_o2(system: SpinSystem, active_spin, phi: float, beta: float, gamma: float) -> CompiledModule:
    """Rotation of one spin by ``phi`` about the axis tilted ``beta`` from +z at azimuth ``gamma``.

    Built as ``z(-gamma) . hard_{+y}(beta) . z(phi) . hard_{-y}(beta) . z(gamma)``
    (rightmost first); the z pieces are shift modules, the tilts are hard
    pulses on every spin.
    """
    k = system.index(active_spin)
    phi, beta, gamma = (canonical_phase(x) for x in (phi, beta, gamma))
    target = f"o2 spin={system.labels[k]} phi={float(phi)!r} beta={float(beta)!r} gamma={float(gamma)!r}"
    inner = compile_o1(system, k, phi)
    parts = []
    segments = []
    if gamma != 0:
        pre = compile_o1(system, k, gamma)
        parts.append(pre)
        segments += pre.segments
    if beta != 0:
        segments.append(_hard_segment(inner.schedule.tau, beta, -90.0))
    parts.append(inner)
    segments += inner.segments
    if beta != 0:
        segments.append(_hard_segment(inner.schedule.tau, beta, 90.0))
    if gamma != 0:
        post = compile_o1(system, k, -gamma)
        parts.append(post)
        segments += post.segments
    U_t = gates.rotation_target(system, k, phi, beta, gamma)
    return _finish("o2", target, segments, U_t, system, (k,), parts)


def compile_o3(system: SpinSystem, pair, theta: float, ghosts: bool = False) -> CompiledModule:
    """``exp(+i theta 2 I_z S_z)`` on a coupled pair, spectators returned."""
    a, b = (system.index(p) for p in pair)
    if a == b:
        raise CompileError("coupling module needs two distinct spins")
    theta = canonical_phase(theta)
    target = f"o3 pair={system.labels[a]},{system.labels[b]} theta={float(theta)!r}"
    T = o3_duration(system, (a, b), theta)
    seg = o3_schedule(system, (a, b), T, ghosts)
    U_t = gates.coupling_target(system, (a, b), theta)
    return _finish("o3", target, [seg], U_t, system, (a, b))


def _train(name, target, parts, U_t, system, active) -> CompiledModule:
    segments = [s for p in parts for s in p.segments]
    return _finish(name, target, segments, U_t, system, active, list(parts))


def assemble_cnot(system: SpinSystem, control, target) -> CompiledModule:
    """CNOT flipping ``target`` when ``control`` is spin-down.

    Module train, first applied first::

        exp(+i pi/2 T_y)        O2 (beta = gamma = pi/2)
        exp(-i pi/2 2 T_z C_z)  O3
        exp(+i pi/2 T_z)        O1
        exp(-i pi/2 T_y)        O2
        exp(+i pi/2 C_z)        O1 on the control

    The final z rotation acts on the control spin; with it on the target
    the product differs from CNOT by a control-dependent phase.
    """
    c = system.index(control)
    t = system.index(target)
    if c == t:
        raise CompileError("control and target must differ")
    if system.J_matrix[c, t] == 0:
        raise CompileError(
            f"J between {system.labels[c]} and {system.labels[t]} is zero: CNOT needs a coupling")
    h = math.pi / 2
    parts = [
        compile_o2(system, t, h, h, h),
        compile_o3(system, (t, c), -h),
        compile_o1(system, t, h),
        compile_o2(system, t, -h, h, h),
        compile_o1(system, c, h),
    ]
    desc = f"cnot control={system.labels[c]} target={system.labels[t]}"
    return _train("cnot", desc, parts, gates.cnot_target(system, c, t), system, (c, t))


@dataclass
class CCNOTCorrection:
    operator: np.ndarray
    train: CompiledModule
    fidelity: float  # of correction @ key part vs CCNOT


def ccnot_correction(system: SpinSystem, spins=(0, 1)) -> CCNOTCorrection:
    """Diagonal fix-up turning the line-selective key gate into an exact CCNOT."""
    if system.n_spins != 3:
        raise CompileError("the CCNOT correction is defined for three spins")
    a, b = (system.index(s) for s in spins)
    q = math.pi / 4
    C = gates.z_phase_unitary(system, {a: q, b: q}, {(a, b): -q})
    parts = [compile_o1(system, a, q), compile_o1(system, b, q), compile_o3(system, (a, b), -q)]
    desc = f"ccnot_correction spins={system.labels[a]},{system.labels[b]}"
    train = _train("ccnot_correction", desc, parts, C, system, (a, b))
    fid = phase_invariant_fidelity(C @ gates.CCNOT_KEY, gates.CCNOT)
    return CCNOTCorrection(C, train, fid)


# ------------------------------------------------------------ targets

def _kv(tokens):
    out = {}
    for tok in tokens:
        k, _, v = tok.partition("=")
        out[k] = v
    return out


def target_unitary(desc: str, system: SpinSystem) -> np.ndarray:
    """Rebuild the target unitary from a module descriptor string."""
    tokens = desc.split()
    if not tokens:
        raise ValueError("empty target descriptor")
    kind, kv = tokens[0], _kv(tokens[1:])
    try:
        if kind == "o1":
            return gates.shift_target(system, system.index(kv["spin"]), float(kv["phi"]))
        if kind == "o2":
            return gates.rotation_target(system, system.index(kv["spin"]), float(kv["phi"]),
                                         float(kv["beta"]), float(kv["gamma"]))
        if kind == "o3":
            a, b = (system.index(x) for x in kv["pair"].split(","))
            return gates.coupling_target(system, (a, b), float(kv["theta"]))
        if kind == "nothing":
            return np.eye(system.dim, dtype=complex)
        if kind == "cnot":
            return gates.cnot_target(system, system.index(kv["control"]), system.index(kv["target"]))
        if kind == "ccnot_correction":
            a, b = (system.index(x) for x in kv["spins"].split(","))
            q = math.pi / 4
            return gates.z_phase_unitary(system, {a: q, b: q}, {(a, b): -q})
    except KeyError as exc:
        raise ValueError(f"target {desc!r}: missing or unknown {exc}") from None
    raise ValueError(f"unknown target kind {kind!r}")


def target_active_spins(desc: str, system: SpinSystem) -> tuple:
    kind, kv = desc.split()[0], _kv(desc.split()[1:])
    if kind in ("o1", "o2"):
        return (system.index(kv["spin"]),)
    if kind == "o3":
        return tuple(system.index(x) for x in kv["pair"].split(","))
    if kind == "cnot":
        return (system.index(kv["control"]), system.index(kv["target"]))
    if kind == "ccnot_correction":
        return tuple(system.index(x) for x in kv["spins"].split(","))
    return ()


def report_text(module: CompiledModule, system: SpinSystem) -> str:
    return format_report(module.target, module.report, system)


def format_report(target: str | None, report: Report, system: SpinSystem,
                  extra: dict | None = None, gated: bool = True) -> str:
    lines = [f"target: {target if target else '(none)'}"]
    if report.fidelity is not None and target:
        lines.append(f"fidelity: {report.fidelity!r}")
        if gated:
            lines.append(f"gate: 1 - {report.gate:g}")
            lines.append(f"status: {'PASS' if report.passed else 'FAIL'}")
        else:
            lines.append("status: REPORT (finite-pulse fidelity is not gated)")
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {v}")
    if report.violations:
        lines.append("violations:")
        lines += [f"  {v}" for v in report.violations]
    for i, prof in enumerate(report.toggling):
        lines.append(f"segment {i}:")
        if prof is None:
            lines.append("  toggling: n/a (non-pi pulses; checked by simulation)")
            continue
        lines.append(f"  {'term':<10} {'net_tau':>8} {'net_s':>22}  state")
        for name, net, sec, state in prof.table(system.labels):
            lines.append(f"  {name:<10} {str(net):>8} {sec!r:>22}  {state}")
    return "\n".join(lines) + "\n"
