"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import ast
import math
import operator
import sys
from pathlib import Path

import numpy as np

from . import compiler
from .algebra import phase_invariant_fidelity
from .config import ConfigError, ProjectConfig, bundled_config, load_config
from .dynamics import SimOptions, SimulationError, simulate_unitary, spectator_deviation_of
from .schedule import ScheduleError, loads, validate
from .spectra import (
    atomic_write_text, detect_fid, prepare_x_pulsed, run_fig3, run_fig5,
    spectrum, spectrum_csv, sweep_csv,
)
from .compiler import o1_schedule, o3_schedule

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


class InputError(ValueError):
    pass


def parse_angle(text: str) -> float:
    """Radians from ``pi``-expressions (``3*pi/4``), plain numbers, or ``<x>deg``."""
    s = text.strip().lower()
    deg = s.endswith("deg")
    if deg:
        s = s[:-3]

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise InputError(f"cannot parse angle {text!r}")

    try:
        value = ev(ast.parse(s, mode="eval"))
    except (SyntaxError, ZeroDivisionError):
        raise InputError(f"cannot parse angle {text!r}") from None
    return math.radians(value) if deg else value


def _config(args) -> ProjectConfig:
    return load_config(args.config) if args.config else bundled_config()


def _options(args, cfg: ProjectConfig) -> SimOptions:
    mode = getattr(args, "mode", "ideal")
    dt = args.dt if getattr(args, "dt", None) is not None else cfg.dt
    return SimOptions(mode=mode, dt=dt, envelope=cfg.envelope(),
                      ghost_compensation=getattr(args, "ghosts", False))


def _emit(text: str, out: str | None, suffix: str) -> None:
    if out:
        atomic_write_text(Path(out + suffix), text)
    else:
        sys.stdout.write(text)


def _label(cfg, name):
    try:
        return cfg.system.index(name)
    except KeyError:
        raise InputError(f"unknown spin label {name!r} (known: {', '.join(cfg.system.labels)})") from None


def cmd_compile(args) -> int:
    cfg = _config(args)
    s = cfg.system
    kind = args.module
    if kind == "o1":
        mod = compiler.compile_o1(s, _label(cfg, args.spin), parse_angle(args.phase), ghosts=args.ghosts)
    elif kind == "o2":
        mod = compiler.compile_o2(s, _label(cfg, args.spin), parse_angle(args.phi),
                                  parse_angle(args.beta), parse_angle(args.gamma))
    elif kind == "o3":
        names = args.pair.split(",")
        if len(names) != 2:
            raise InputError("--pair takes two labels, e.g. I,S")
        mod = compiler.compile_o3(s, tuple(_label(cfg, x) for x in names), parse_angle(args.theta),
                                  ghosts=args.ghosts)
    elif kind == "nothing":
        mod = compiler.compile_do_nothing(s, args.duration)
    elif kind == "cnot":
        mod = compiler.assemble_cnot(s, _label(cfg, args.control), _label(cfg, args.target))
    else:
        names = args.spins.split(",")
        mod = compiler.ccnot_correction(s, tuple(_label(cfg, x) for x in names)).train
    report = compiler.report_text(mod, s)
    if args.out:
        _emit(mod.text(s), args.out, ".sched")
        _emit(report, args.out, ".report")
    else:
        sys.stdout.write(mod.text(s))
        sys.stdout.write("".join(f"# {l}\n" for l in report.splitlines()))
    return EXIT_OK if mod.report.passed else EXIT_VERIFY


def cmd_verify(args) -> int:
    cfg = _config(args)
    s = cfg.system
    try:
        text = Path(args.schedule).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {args.schedule}: {exc}") from None
    sf = loads(text, s.labels)
    opts = _options(args, cfg)
    segments = sf.segments
    violations, profiles = compiler.static_checks(segments, s)
    extra = {"mode": opts.mode, "segments": len(segments)}
    fidelity = None
    if not violations:
        U = simulate_unitary(segments, s, opts)
        if sf.target:
            try:
                target = compiler.target_unitary(sf.target, s)
                active = compiler.target_active_spins(sf.target, s)
            except ValueError as exc:
                raise InputError(str(exc)) from None
            fidelity = phase_invariant_fidelity(U, target)
            for k in range(s.n_spins):
                if k not in active:
                    dev = spectator_deviation_of(U, s.n_spins, k, args.trials, args.seed)
                    extra[f"spectator {s.labels[k]} max trace distance"] = f"{dev:.3e}"
    rep = compiler.Report(fidelity, profiles, violations, cfg.fidelity_gate)
    gated = opts.mode == "ideal"
    _emit(compiler.format_report(sf.target if fidelity is not None else None, rep, s, extra, gated),
          args.out, ".report")
    if violations:
        return EXIT_VERIFY
    if fidelity is not None and gated and not rep.passed:
        return EXIT_VERIFY
    return EXIT_OK


def _spectrum_after(system, U, prep, n_points=8192):
    from .dynamics import evolve_density
    rho = evolve_density(prep, U)
    width = max(abs(d) for d in system.delta) + np.abs(system.J_matrix).sum() / 2
    dwell = 1.0 / (2.5 * max(width, 1.0))
    return spectrum(detect_fid(rho, system, n_points, dwell), system)


def cmd_fig(args) -> int:
    cfg = _config(args)
    s = cfg.system
    opts = _options(args, cfg)
    if args.which == "fig3":
        rows = run_fig3(s, args.steps, active=_label(cfg, args.spin), opts=opts)
        prep = prepare_x_pulsed(s, 0.0)
        builder = lambda T: o1_schedule(s, _label(cfg, args.spin), T)
    else:
        names = args.pair.split(",")
        pair = tuple(_label(cfg, x) for x in names)
        rows = run_fig5(s, args.steps, pair=pair, opts=opts)
        prep = prepare_x_pulsed(s, math.pi)
        builder = lambda T: o3_schedule(s, pair, T)
    table = sweep_csv(rows, s.labels)
    if not args.out:
        sys.stdout.write(table)
        return EXIT_OK
    out = Path(args.out)
    atomic_write_text(out / f"{args.which}.csv", table)
    for r in rows:
        U = np.eye(s.dim) if r.tau8_s == 0 else simulate_unitary(builder(r.tau8_s), s, opts)
        spec = _spectrum_after(s, U, prep)
        atomic_write_text(out / f"{args.which}_step{r.step}.csv", spectrum_csv(spec))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="project config (default: bundled three-proton system)")
    common.add_argument("--out", help="output prefix (compile, verify) or directory (fig)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="nmrmod", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a module to a schedule + report")
    csub = c.add_subparsers(dest="module", required=True)
    o1 = csub.add_parser("o1", parents=[common], help="shift evolution exp(+i phase I_z)")
    o1.add_argument("--spin", required=True)
    o1.add_argument("--phase", required=True)
    o1.add_argument("--ghosts", action="store_true", help="add Bloch-Siegert ghost pulses")
    o2 = csub.add_parser("o2", parents=[common], help="rotation about a tilted axis")
    o2.add_argument("--spin", required=True)
    o2.add_argument("--phi", required=True)
    o2.add_argument("--beta", default="0")
    o2.add_argument("--gamma", default="0")
    o3 = csub.add_parser("o3", parents=[common], help="coupling evolution exp(+i theta 2 I_z S_z)")
    o3.add_argument("--pair", required=True)
    o3.add_argument("--theta", required=True)
    o3.add_argument("--ghosts", action="store_true")
    nothing = csub.add_parser("nothing", parents=[common], help="do-nothing module")
    nothing.add_argument("--duration", type=float, required=True, help="seconds")
    cn = csub.add_parser("cnot", parents=[common])
    cn.add_argument("--control", required=True)
    cn.add_argument("--target", required=True)
    cc = csub.add_parser("ccnot", parents=[common], help="CCNOT diagonal correction train")
    cc.add_argument("--spins", default="I,S")
    for sp in (nothing, cn, cc, o2):
        sp.set_defaults(ghosts=False)

    v = sub.add_parser("verify", parents=[common], help="verify a schedule file")
    v.add_argument("schedule")
    v.add_argument("--mode", choices=["ideal", "finite"], default="ideal")
    v.add_argument("--dt", type=float)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--ghosts", action="store_true", help="honour ghost events (finite mode)")

    f = sub.add_parser("fig", parents=[common], help="phase-step sweeps as CSV")
    f.add_argument("which", choices=["fig3", "fig5"])
    f.add_argument("--steps", type=int, default=5)
    f.add_argument("--mode", choices=["ideal", "finite"], default="ideal")
    f.add_argument("--dt", type=float)
    f.add_argument("--spin", default="I", help="active spin for fig3")
    f.add_argument("--pair", default="I,S", help="active pair for fig5")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"compile": cmd_compile, "verify": cmd_verify, "fig": cmd_fig}[args.command]
    try:
        return handler(args)
    except compiler.VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (InputError, ConfigError, ScheduleError, SimulationError, compiler.CompileError,
            KeyError, IndexError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
