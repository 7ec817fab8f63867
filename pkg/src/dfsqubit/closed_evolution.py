"""Exact propagation of the isolated qubits and a brute-force open-system oracle."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .model import (
    DEFAULT_DIMENSION_CAP,
    ModelParams,
    bell_to_computational,
    check_state,
    computational_to_bell,
    eigenstates,
    hamiltonian_dense,
    spectrum,
)


def propagate_closed(state0, params: ModelParams, t: float) -> np.ndarray:
    """Evolve a Bell-basis state under the qubit Hamiltonian alone."""
    psi0 = check_state(state0)
    vecs = eigenstates(params)
    phases = np.exp(-1j * spectrum(params) * t)
    return vecs @ (phases * (vecs.conj().T @ psi0))


def closed_trajectory(state0, params: ModelParams, t_grid: Sequence[float]) -> np.ndarray:
    """Closed-system density matrices (Bell basis), shape ``(len(t_grid), 4, 4)``."""
    psi0 = check_state(state0)
    vecs = eigenstates(params)
    coeffs = vecs.conj().T @ psi0
    times = np.asarray(t_grid, dtype=float)
    phases = np.exp(-1j * np.outer(times, spectrum(params)))
    states = (phases * coeffs) @ vecs.T
    return np.einsum("ti,tj->tij", states, states.conj())


class ExactOracle:
    """Dense spectral propagator of the full qubits+bath Hamiltonian.

    The Hamiltonian is diagonalized once; every time point is then a phase
    rotation, so results carry no time-step error. The bath starts in its
    vacuum.
    """

    def __init__(self, params: ModelParams, dimension_cap: int = DEFAULT_DIMENSION_CAP):
        self.params = params
        self.hamiltonian = hamiltonian_dense(params, dimension_cap)
        self.energies, self.vectors = np.linalg.eigh(self.hamiltonian)
        self.bath_dim = self.hamiltonian.shape[0] // 4

    def initial_vector(self, state0) -> np.ndarray:
        psi = bell_to_computational(check_state(state0))
        vacuum = np.zeros(self.bath_dim, dtype=complex)
        vacuum[0] = 1.0
        return np.kron(psi, vacuum)

    def full_states(self, state0, t_grid: Sequence[float]) -> np.ndarray:
        coeffs = self.vectors.conj().T @ self.initial_vector(state0)
        times = np.asarray(t_grid, dtype=float)
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * coeffs) @ self.vectors.T

    def reduced(self, full_state: np.ndarray) -> np.ndarray:
        m = full_state.reshape(4, self.bath_dim)
        return computational_to_bell(m @ m.conj().T)

    def trajectory(self, state0, t_grid: Sequence[float]) -> list[np.ndarray]:
        return [self.reduced(psi) for psi in self.full_states(state0, t_grid)]


def exact_open_trajectory(
    state0,
    params: ModelParams,
    t_grid: Sequence[float],
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
) -> list[np.ndarray]:
    """Reduced two-qubit density matrices (Bell basis) from exact dynamics.

    Raises:
        DimensionCapError: if ``4 * n_bos**n_modes`` exceeds ``dimension_cap``.
    """
    return ExactOracle(params, dimension_cap).trajectory(state0, t_grid)
