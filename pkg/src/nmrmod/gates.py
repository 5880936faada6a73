"""Target unitaries and reference gate matrices."""

from __future__ import annotations

import numpy as np

from .algebra import SpinSystem, embed, zeeman_diagonal

# reference matrices in the |0> = spin-up computational basis, spin 0 leftmost
ZZ_HALF_PI = np.exp(-1j * np.pi / 4) * np.diag([1, 1j, 1j, 1])

# flips spin 0 when spin 1 is down
CNOT = np.array([[1, 0, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0]], dtype=complex)

CCNOT = np.eye(8, dtype=complex)
CCNOT[6:, 6:] = [[0, 1], [1, 0]]

CCNOT_KEY = np.eye(8, dtype=complex)  # the line-selective "key part" of CCNOT
CCNOT_KEY[6:, 6:] = [[0, 1j], [1j, 0]]


def z_phase_unitary(system: SpinSystem, shifts: dict, couplings: dict = None) -> np.ndarray:
    """``exp(i (sum_k a_k I_kz + sum_kl b_kl 2 I_kz I_lz))`` as a diagonal matrix.

    ``shifts`` maps spin index to ``a_k``; ``couplings`` maps ``(k, l)`` to ``b_kl``.
    """
    m = zeeman_diagonal(system.n_spins)
    arg = np.zeros(system.dim)
    for k, a in shifts.items():
        arg += a * m[:, k]
    for (k, l), b in (couplings or {}).items():
        arg += b * 2 * m[:, k] * m[:, l]
    return np.diag(np.exp(1j * arg))


def shift_target(system: SpinSystem, spin: int, phi: float) -> np.ndarray:
    return z_phase_unitary(system, {spin: phi})


def coupling_target(system: SpinSystem, pair, theta: float) -> np.ndarray:
    return z_phase_unitary(system, {}, {tuple(pair): theta})


def rotation_axis(beta: float, gamma: float) -> np.ndarray:
    """Unit vector tilted ``beta`` from +z in the vertical plane at azimuth ``gamma``."""
    return np.array([np.sin(beta) * np.cos(gamma), np.sin(beta) * np.sin(gamma), np.cos(beta)])


def rotation_target(system: SpinSystem, spin: int, phi: float, beta: float, gamma: float) -> np.ndarray:
    """``exp(i phi n.I)`` on one spin, identity elsewhere."""
    nx, ny, nz = rotation_axis(beta, gamma)
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    R = np.array([[c + 1j * s * nz, 1j * s * (nx - 1j * ny)],
                  [1j * s * (nx + 1j * ny), c - 1j * s * nz]], dtype=complex)
    return embed(system.n_spins, {spin: R})


def cnot_target(system: SpinSystem, control: int, target: int) -> np.ndarray:
    """Flip ``target`` when ``control`` is spin-down (|1>)."""
    up = np.diag([1, 0]).astype(complex)
    down = np.diag([0, 1]).astype(complex)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    n = system.n_spins
    return embed(n, {control: up}) + embed(n, {control: down, target: X})
