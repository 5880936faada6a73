"""Project configuration: a spin system plus simulation defaults.

INI-style ``key = value`` blocks::

    [system]
    labels = I, S, R
    delta_hz = 12.5, -207.0, 201.0
    J_hz = 0, -10.1, 11.3; -10.1, 0, 4.3; 11.3, 4.3, 0
    coupling_model = weak_zz

    [defaults]
    dt = 2e-5
    fidelity_gate = 1e-10
    soft_pulse_duration = 0.121
    envelope = pulses/reburp.txt
    seed = 0

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .algebra import CouplingModel, SpinSystem
from .shapes import ShapedPulse, load_table, reburp_envelope

SYSTEM_KEYS = {"labels", "delta_hz", "J_hz", "coupling_model"}
DEFAULT_KEYS = {"dt", "fidelity_gate", "soft_pulse_duration", "envelope", "seed"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectConfig:
    system: SpinSystem
    dt: float | None = None
    fidelity_gate: float = 1e-10
    soft_pulse_duration: float = 0.121
    envelope_path: Path | None = None
    seed: int = 0

    def envelope(self) -> ShapedPulse:
        if self.envelope_path is not None:
            return load_table(self.envelope_path).calibrated()
        return reburp_envelope(self.soft_pulse_duration)


def _floats(text: str, what: str) -> list:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{what}: expected numbers, got {text!r}") from None


def parse_config(text: str, base_dir: Path | None = None, source: str = "<config>") -> ProjectConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str  # keep J_hz case
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    extra = set(cp.sections()) - {"system", "defaults"}
    if extra:
        raise ConfigError(f"{source}: unknown section(s) {sorted(extra)}")
    if not cp.has_section("system"):
        raise ConfigError(f"{source}: missing [system] section")
    sysec = cp["system"]
    unknown = set(sysec) - SYSTEM_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) in [system]: {sorted(unknown)}")
    for key in ("labels", "delta_hz", "J_hz"):
        if key not in sysec:
            raise ConfigError(f"{source}: [system] needs {key}")
    labels = [x.strip() for x in sysec["labels"].split(",") if x.strip()]
    delta = _floats(sysec["delta_hz"], "delta_hz")
    rows = [r for r in sysec["J_hz"].split(";") if r.strip()]
    J = [_floats(r, "J_hz") for r in rows]
    try:
        model = CouplingModel(sysec.get("coupling_model", "weak_zz").strip())
    except ValueError:
        raise ConfigError(f"{source}: coupling_model must be weak_zz or strong_isotropic") from None
    try:
        system = SpinSystem(labels, delta, J, model)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from None

    kw = {}
    if cp.has_section("defaults"):
        d = cp["defaults"]
        unknown = set(d) - DEFAULT_KEYS
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [defaults]: {sorted(unknown)}")
        try:
            if d.get("dt"):
                kw["dt"] = float(d["dt"])
            if d.get("fidelity_gate"):
                kw["fidelity_gate"] = float(d["fidelity_gate"])
            if d.get("soft_pulse_duration"):
                kw["soft_pulse_duration"] = float(d["soft_pulse_duration"])
            if d.get("seed"):
                kw["seed"] = int(d["seed"])
        except ValueError as exc:
            raise ConfigError(f"{source}: {exc}") from None
        if d.get("envelope"):
            p = Path(d["envelope"])
            kw["envelope_path"] = p if p.is_absolute() or base_dir is None else base_dir / p
    return ProjectConfig(system, **kw)


def load_config(path) -> ProjectConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent, str(path))


def bundled_config_text() -> str:
    return resources.files("nmrmod").joinpath("data/isr.cfg").read_text()


def bundled_config() -> ProjectConfig:
    """The three-proton example system shipped with the package."""
    return parse_config(bundled_config_text(), None, "isr.cfg")
