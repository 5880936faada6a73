"""Refocusing-module compiler, verifier and simulator for weakly coupled spin-1/2 NMR systems."""

from .algebra import CouplingModel, SpinSystem, phase_invariant_fidelity
from .compiler import (
    CompileError, CompiledModule, VerificationError, assemble_cnot, ccnot_correction,
    compile_do_nothing, compile_o1, compile_o2, compile_o3,
)
from .config import ProjectConfig, bundled_config, load_config
from .dynamics import DensityState, SimOptions, simulate_unitary
from .schedule import Schedule, dumps, loads, validate
from .toggling import toggling_analysis

__all__ = [
    "CouplingModel", "SpinSystem", "phase_invariant_fidelity",
    "CompileError", "CompiledModule", "VerificationError", "assemble_cnot", "ccnot_correction",
    "compile_do_nothing", "compile_o1", "compile_o2", "compile_o3",
    "ProjectConfig", "bundled_config", "load_config",
    "DensityState", "SimOptions", "simulate_unitary",
    "Schedule", "dumps", "loads", "validate", "toggling_analysis",
]
__version__ = "0.1.0"
