import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from nmrmod.algebra import (
    CouplingModel, SpinSystem, is_unitary, phase_invariant_fidelity, pulse_2x2,
)
from nmrmod.compiler import compile_o1, compile_o2, o1_schedule
from nmrmod.dynamics import (
    DensityState, SimOptions, SimulationError, evolve_density, neighbour_phase_error,
    simulate_unitary, spectator_deviation,
)
from nmrmod.schedule import Ghost, HardPulse, Schedule, SoftPi
from nmrmod.shapes import gaussian_envelope, reburp_envelope
from nmrmod.toggling import effective_unitary

from helpers import random_dyadic_schedule, random_system


def single_pulse(duration, spin=0, phase=90.0):
    return Schedule(duration, 1, [SoftPi(Fraction(1, 2), spin, phase)])


# ---- ideal mode

def test_ideal_o1_matches_target(isr):
    mod = compile_o1(isr, "I", 0.8)
    assert phase_invariant_fidelity(simulate_unitary(mod.segments, isr), mod.target_unitary) >= 1 - 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_ideal_simulation_agrees_with_toggling(seed, n):
    rng = np.random.default_rng(seed)
    system = random_system(n, rng)
    s = random_dyadic_schedule(n, rng)
    U = simulate_unitary(s, system)
    assert is_unitary(U, 1e-10)
    assert phase_invariant_fidelity(U, effective_unitary(s, system)) >= 1 - 1e-10


def test_ideal_ignores_ghosts(isr):
    s = o1_schedule(isr, 0, 0.08)
    g = o1_schedule(isr, 0, 0.08, ghosts=True)
    assert np.allclose(simulate_unitary(s, isr), simulate_unitary(g, isr), atol=1e-14)


def test_miscalibrated_pulses_break_refocusing(isr):
    mod = compile_o1(isr, "I", 0.8)
    U = simulate_unitary(mod.segments, isr, SimOptions(miscalibration=0.05))
    assert phase_invariant_fidelity(U, mod.target_unitary) < 1 - 1e-4


def test_empty_segment_list_is_identity(isr):
    assert np.allclose(simulate_unitary([], isr), np.eye(8))


# ---- finite mode

def test_on_resonance_single_spin_pulse():
    s = SpinSystem(["A"], [0.0], [[0]])
    for env in (gaussian_envelope(0.05), reburp_envelope(0.05)):
        U = simulate_unitary(single_pulse(0.05), s, SimOptions("finite", envelope=env))
        assert phase_invariant_fidelity(U, pulse_2x2(math.pi, math.pi / 2)) >= 0.999


def flip_probability(U, n, k):
    """Average probability that spin k changes state, over basis inputs."""
    bit = 1 << (n - 1 - k)
    idx = np.arange(len(U))
    return float(np.mean([np.sum(np.abs(U[(idx & bit) != (j & bit), j]) ** 2) for j in idx]))


@pytest.mark.parametrize("off", [0.0, 6.0, 12.0])
def test_reburp_refocuses_inside_band(off):
    # the field on C also reaches A, detuned by ``off``; inside the band A is refocused too
    T = 0.121
    s = SpinSystem(["C", "A"], [0.0, off], [[0, 0], [0, 0]])
    U = simulate_unitary(single_pulse(T, 0), s, SimOptions("finite", envelope=reburp_envelope(T)))
    both = simulate_unitary(Schedule(T, 1, [HardPulse(Fraction(1, 2), 180.0, 90.0)]), s)
    assert phase_invariant_fidelity(U, both) >= 0.99


@pytest.mark.parametrize("off", [45.0, 200.0])
def test_reburp_leaves_distant_spin_unflipped(off):
    T = 0.121
    s = SpinSystem(["C", "A"], [0.0, off], [[0, 0], [0, 0]])
    U = simulate_unitary(single_pulse(T, 0), s, SimOptions("finite", envelope=reburp_envelope(T)))
    assert flip_probability(U, 2, 1) < 0.01
    assert flip_probability(U, 2, 0) > 0.999


def test_finite_unitary_is_unitary(isr):
    U = simulate_unitary(single_pulse(0.121, 1), isr, SimOptions("finite"))
    assert is_unitary(U, 1e-10)


def test_dt_guard(isr):
    with pytest.raises(SimulationError, match="too coarse"):
        simulate_unitary(single_pulse(0.121, 1), isr, SimOptions("finite", dt=1e-3))


def test_overlapping_soft_pulses_rejected(isr):
    s = Schedule(0.05, 8, [SoftPi(1, 1), SoftPi(2, 2), SoftPi(5, 1), SoftPi(6, 2)])
    with pytest.raises(SimulationError, match="overlap"):
        simulate_unitary(s, isr, SimOptions("finite"))


def test_orphan_ghost_rejected(isr):
    s = Schedule(0.2, 1, [Ghost(Fraction(1, 2), 1, 201.0)])
    with pytest.raises(SimulationError, match="mirrors no soft pulse"):
        simulate_unitary(s, isr, SimOptions("finite", ghost_compensation=True))


def test_hard_pulse_inside_soft_window_rejected(isr):
    s = Schedule(0.2, 2, [SoftPi(1, 1), HardPulse(1, 180.0, 0.0)], refocusing=False)
    with pytest.raises(SimulationError, match="inside a soft pulse"):
        simulate_unitary(s, isr, SimOptions("finite"))


def test_dt_convergence_is_second_order(isr):
    env = reburp_envelope(0.121, n_samples=64)
    base = env.duration / env.n_samples
    Us = [simulate_unitary(single_pulse(0.121, 1), isr, SimOptions("finite", dt=base / 2**k, envelope=env))
          for k in range(2, 6)]
    errs = [np.abs(a - Us[-1]).max() for a in Us[:-1]]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.2)


# ---- Bloch-Siegert

def test_bloch_siegert_pushes_neighbour_away(isr):
    opts = SimOptions("finite")
    err = neighbour_phase_error(isr, "S", "R", opts)
    # R sits above S, so moving away means a faster, positive precession
    assert isr.delta[2] > isr.delta[1]
    assert err > 1e-3
    # and the mirror case: a pulse on R pushes S further down
    assert neighbour_phase_error(isr, "R", "S", opts) < -1e-3


def test_ghost_reduces_bloch_siegert(isr):
    opts = SimOptions("finite")
    raw = neighbour_phase_error(isr, "S", "R", opts)
    comp = neighbour_phase_error(isr, "S", "R", opts, ghost=True)
    assert abs(comp) < abs(raw) / 10


def test_bloch_siegert_scales_like_inverse_offset():
    # B1^2 / (2 offset): doubling the separation roughly halves the phase
    opts = SimOptions("finite", envelope=reburp_envelope(0.121))
    errs = []
    for sep in (200.0, 400.0):
        s = SpinSystem(["S", "R"], [0.0, sep], [[0, 0], [0, 0]])
        errs.append(neighbour_phase_error(s, "S", "R", opts))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)


# ---- coupling models

@pytest.mark.parametrize("ratio", [1e-2, 1e-3, 1e-4])
def test_strong_coupling_approaches_weak(ratio):
    dd = 400.0
    J = ratio * dd
    weak = SpinSystem(["A", "B"], [dd / 2, -dd / 2], [[0, J], [J, 0]])
    strong = weak.with_coupling_model(CouplingModel.STRONG_ISOTROPIC)
    mod = compile_o1(weak, "A", 0.6)
    Uw = simulate_unitary(mod.segments, weak)
    Us = simulate_unitary(mod.segments, strong)
    gap = 1 - phase_invariant_fidelity(Uw, Us)
    # flip-flop mixing amplitude ~ J / (2 dd), so the gap is second order in the ratio
    assert gap <= 10 * ratio**2


def test_coupling_model_override(isr):
    s = single_pulse(0.05, 1)
    a = simulate_unitary(s, isr, SimOptions(coupling_model=CouplingModel.STRONG_ISOTROPIC))
    b = simulate_unitary(s, isr.with_coupling_model(CouplingModel.STRONG_ISOTROPIC))
    assert np.allclose(a, b)


# ---- density states

def test_density_state_validation():
    with pytest.raises(ValueError):
        DensityState(np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):
        DensityState(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(ValueError):
        DensityState(np.diag([1.2, -0.2]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_evolve_density_properties(seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(8, 8)) + 1j * r.normal(size=(8, 8))
    U = scipy.linalg.expm(-1j * (A + A.conj().T) / 2)
    psi = r.normal(size=8) + 1j * r.normal(size=8)
    rho = DensityState.pure(psi)
    out = evolve_density(rho, U)
    assert out.purity == pytest.approx(rho.purity, abs=1e-10)
    assert np.allclose(evolve_density(rho, np.eye(8)).matrix, rho.matrix)
    mixed = DensityState.maximally_mixed(8)
    assert np.allclose(evolve_density(mixed, U).matrix, mixed.matrix, atol=1e-14)


def test_spectator_deviation_examples(isr):
    assert spectator_deviation(Schedule(0.01, 0), isr, None, "R") == 0.0
    mod = compile_o1(isr, "I", 1.3)
    assert spectator_deviation(mod.segments, isr, None, "R") <= 1e-8


def test_o2_finite_spectator_residual_is_reported(isr):
    # long-pulse finite simulation: small but nonzero spectator disturbance
    mod = compile_o2(isr, "I", math.pi, math.pi / 4, 0.0)
    segs = [s if s.duration == 0 else o1_schedule(isr, 0, 1.12 + s.total_seconds) for s in mod.segments]
    dev = spectator_deviation(segs, isr, SimOptions("finite"), "R", trials=10)
    assert 0 < dev < 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_batched_product_states_are_normalised_products(n):
    from nmrmod.dynamics import random_product_states
    psis = random_product_states(n, 20, np.random.default_rng(n))
    assert np.allclose(np.linalg.norm(psis, axis=1), 1)
    for psi in psis:
        for cut in range(1, n):
            sv = np.linalg.svd(psi.reshape(2**cut, -1), compute_uv=False)
            assert sv[1:].max(initial=0) < 1e-12
