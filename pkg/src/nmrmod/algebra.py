"""Dense operator algebra for small systems of coupled spin-1/2 nuclei.

Conventions
-----------
- hbar = 1. Frequencies are stored in Hz and converted to rad/s only when a
  Hamiltonian is built (omega = 2*pi*delta).
- Evolution operators are ``exp(-i H t)``.
- Spin ``0`` is the leftmost Kronecker factor; ``|0>`` is spin-up
  (``I_z = diag(1/2, -1/2)``).
- Coupling terms follow the form ``2*pi*J*I_kz*I_lz`` (weak) or
  ``2*pi*J*(I_k . I_l)`` (strong), i.e. ``pi*J`` times the product operator
  ``2 I_kz I_lz``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ATOL = 1e-12

PAULI = {
    "E": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# spin-1/2 operators I_a = sigma_a / 2
SPIN_HALF = {
    "E": PAULI["E"],
    "Ix": PAULI["x"] / 2,
    "Iy": PAULI["y"] / 2,
    "Iz": PAULI["z"] / 2,
}


class CouplingModel(str, enum.Enum):
    WEAK_ZZ = "weak_zz"
    STRONG_ISOTROPIC = "strong_isotropic"


@dataclass(frozen=True)
class SpinSystem:
    """N coupled spin-1/2 nuclei in the rotating frame of the transmitter.

    Parameters
    ----------
    labels : sequence of str
        Unique short names, one per spin.
    delta : sequence of float
        Chemical-shift offsets from the transmitter, Hz.
    J : n x n array_like
        Symmetric scalar-coupling matrix, Hz, zero diagonal.
    coupling_model : CouplingModel or str
        ``weak_zz`` keeps only the ZZ part of each coupling.
    """

    labels: tuple
    delta: tuple
    J: tuple
    coupling_model: CouplingModel = CouplingModel.WEAK_ZZ

    def __init__(self, labels, delta, J, coupling_model=CouplingModel.WEAK_ZZ):
        labels = tuple(str(x) for x in labels)
        delta = tuple(float(x) for x in delta)
        Jm = np.asarray(J, dtype=float)
        n = len(labels)
        if n < 1:
            raise ValueError("a spin system needs at least one spin")
        if len(set(labels)) != n:
            raise ValueError(f"spin labels must be unique, got {labels}")
        if len(delta) != n:
            raise ValueError(f"expected {n} offsets, got {len(delta)}")
        if Jm.shape != (n, n):
            raise ValueError(f"J must be {n}x{n}, got shape {Jm.shape}")
        if not (np.all(np.isfinite(Jm)) and all(math.isfinite(d) for d in delta)):
            raise ValueError("offsets and couplings must be finite")
        if not np.array_equal(Jm, Jm.T):
            raise ValueError("J must be symmetric")
        if np.any(np.diag(Jm) != 0):
            raise ValueError("J must have a zero diagonal")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "J", tuple(tuple(row) for row in Jm.tolist()))
        object.__setattr__(self, "coupling_model", CouplingModel(coupling_model))

    @property
    def n_spins(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    @property
    def J_matrix(self) -> np.ndarray:
        return np.array(self.J, dtype=float)

    def index(self, label) -> int:
        """Index of a spin given its label (or an index, which is range-checked)."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if not 0 <= label < self.n_spins:
                raise IndexError(f"spin index {label} out of range for {self.n_spins} spins")
            return int(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown spin label {label!r}") from None

    def with_coupling_model(self, model) -> "SpinSystem":
        return SpinSystem(self.labels, self.delta, self.J, model)

    def with_offsets(self, delta) -> "SpinSystem":
        return SpinSystem(self.labels, delta, self.J, self.coupling_model)

    def with_couplings(self, J) -> "SpinSystem":
        return SpinSystem(self.labels, self.delta, J, self.coupling_model)


@dataclass(frozen=True)
class ProductOperatorTerm:
    """``coefficient * 2^(m-1) * prod_k factor_k`` where m counts non-E factors.

    The ``2^(m-1)`` normalisation makes ``2 I_z S_z`` the natural two-spin
    term, as in the usual product-operator notation.
    """

    coefficient: float
    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        bad = [f for f in factors if f not in SPIN_HALF]
        if bad:
            raise ValueError(f"unknown product-operator factor(s) {bad}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_dict(cls, n_spins: int, coefficient: float, factors: dict) -> "ProductOperatorTerm":
        """Build from a sparse ``{spin_index: 'Iz', ...}`` mapping."""
        full = ["E"] * n_spins
        for k, f in factors.items():
            full[k] = f
        return cls(coefficient, tuple(full))


def _check_dim(dim: int) -> int:
    if dim < 1 or dim & (dim - 1):
        raise ValueError(f"operator dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def embed(n_spins: int, ops: dict) -> np.ndarray:
    """Kronecker product with ``ops[k]`` (2x2) at position k and identity elsewhere."""
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, ops.get(k, PAULI["E"]))
    return out


def single_spin_operator(system: SpinSystem, spin, axis: str) -> np.ndarray:
    """``I_axis`` of one spin embedded in the full Hilbert space."""
    k = system.index(spin)
    key = axis if axis.startswith("I") else "I" + axis
    if key not in ("Ix", "Iy", "Iz"):
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    return embed(system.n_spins, {k: SPIN_HALF[key]})


def term_to_operator(system: SpinSystem, term: ProductOperatorTerm) -> np.ndarray:
    if len(term.factors) != system.n_spins:
        raise ValueError(
            f"term has {len(term.factors)} factors for a {system.n_spins}-spin system"
        )
    active = sum(f != "E" for f in term.factors)
    scale = 2.0 ** (active - 1) if active else 1.0
    ops = {k: SPIN_HALF[f] for k, f in enumerate(term.factors)}
    return term.coefficient * scale * embed(system.n_spins, ops)


def zeeman_diagonal(n_spins: int) -> np.ndarray:
    """m_k for every basis state: array of shape (2**n, n) with entries +-1/2."""
    idx = np.arange(2**n_spins)
    bits = (idx[:, None] >> np.arange(n_spins - 1, -1, -1)[None, :]) & 1
    return 0.5 - bits


def free_hamiltonian(system: SpinSystem) -> np.ndarray:
    """Pulse-free Hamiltonian in rad/s (transmitter rotating frame)."""
    n = system.n_spins
    J = system.J_matrix
    if system.coupling_model is CouplingModel.WEAK_ZZ:
        m = zeeman_diagonal(n)
        diag = m @ (2 * np.pi * np.asarray(system.delta))
        for k in range(n):
            for l in range(k + 1, n):
                if J[k, l]:
                    diag = diag + 2 * np.pi * J[k, l] * m[:, k] * m[:, l]
        return np.diag(diag.astype(complex))
    H = np.zeros((system.dim, system.dim), dtype=complex)
    for k in range(n):
        H += 2 * np.pi * system.delta[k] * embed(n, {k: SPIN_HALF["Iz"]})
    for k in range(n):
        for l in range(k + 1, n):
            if J[k, l]:
                for a in ("Ix", "Iy", "Iz"):
                    H += 2 * np.pi * J[k, l] * embed(n, {k: SPIN_HALF[a], l: SPIN_HALF[a]})
    return H


def is_hermitian(H: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(H - H.conj().T), initial=0.0) <= atol)


def is_unitary(U: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(len(U))), initial=0.0) <= atol)


def propagator(H: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` for hermitian ``H``."""
    H = np.asarray(H, dtype=complex)
    _check_dim(len(H))
    if not is_hermitian(H, atol=ATOL * max(1.0, float(np.max(np.abs(H), initial=0.0)))):
        raise ValueError("propagator needs a hermitian generator")
    if t == 0:
        return np.eye(len(H), dtype=complex)
    off = H - np.diag(np.diag(H))
    if not np.any(off):
        return np.diag(np.exp(-1j * np.real(np.diag(H)) * t))
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def rotation(axis_op: np.ndarray, angle: float) -> np.ndarray:
    """``exp(-i angle A)`` for a hermitian generator ``A``."""
    return propagator(axis_op, angle)


def pulse_2x2(angle: float, phase: float) -> np.ndarray:
    """Single-spin rotation by ``angle`` about the in-plane axis at ``phase`` from +x."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    # exp(-i angle (cos(ph) Ix + sin(ph) Iy)) in closed form
    return np.array(
        [[c, -1j * s * np.exp(-1j * phase)], [-1j * s * np.exp(1j * phase), c]],
        dtype=complex,
    )


def hard_pulse(system: SpinSystem, angle: float, phase_axis: float) -> np.ndarray:
    """Non-selective instantaneous rotation of every spin."""
    R = pulse_2x2(angle, phase_axis)
    return embed(system.n_spins, {k: R for k in range(system.n_spins)})


def selective_pulse(system: SpinSystem, spin, angle: float, phase_axis: float) -> np.ndarray:
    """Instantaneous, perfectly selective rotation of a single spin."""
    k = system.index(spin)
    return embed(system.n_spins, {k: pulse_2x2(angle, phase_axis)})


def phase_invariant_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """``|tr(U^dagger V)| / dim``: 1 iff the operators agree up to a global phase."""
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape != V.shape:
        raise ValueError(f"dimension mismatch: {U.shape} vs {V.shape}")
    return float(min(1.0, abs(np.vdot(U, V)) / len(U)))


def canonical_phase(x: float) -> float:
    """Map an angle to (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    if y == -math.pi:
        y = math.pi
    return y


def partial_trace_keep(rho: np.ndarray, n_spins: int, keep: int) -> np.ndarray:
    """Reduced 2x2 density matrix of spin ``keep``."""
    t = rho.reshape([2] * (2 * n_spins))
    # move the kept spin's row/column axes to the front then contract the rest
    t = np.moveaxis(t, [keep, n_spins + keep], [0, 1])
    rest = n_spins - 1
    t = t.reshape(2, 2, 2**rest, 2**rest)
    return np.einsum("abii->ab", t)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho - sigma)
    return float(0.5 * np.sum(np.abs(w)))


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
