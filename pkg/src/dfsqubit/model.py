"""Two interacting qubits in a common Ohmic bath: parameters, bases and spectrum.

Conventions used throughout the package:

* Computational basis of one qubit: index 0 is the +1 eigenstate of sigma_z.
  Qubit 1 is the most significant tensor factor.
* Bell basis ordering is ``(S, TAF, TF+, TF-)`` with
  ``S = (|01> - |10>)/sqrt2``, ``TAF = (|01> + |10>)/sqrt2``,
  ``TF+ = (|00> + |11>)/sqrt2`` and ``TF- = (|00> - |11>)/sqrt2``.
* Energy eigenbasis ordering is the labelling ``0..3`` of :func:`eigenstates`,
  which is not ascending in energy for every ``nu``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal

import numpy as np

CutoffKind = Literal["hard", "exponential"]

BELL_LABELS = ("S", "TAF", "TF+", "TF-")
S, TAF, TFP, TFM = range(4)

SQRT_HALF = np.sqrt(0.5)

#: Columns are the Bell states written in the computational basis.
BELL_TO_COMPUTATIONAL = np.array(
    [
        [0.0, 0.0, SQRT_HALF, SQRT_HALF],
        [SQRT_HALF, SQRT_HALF, 0.0, 0.0],
        [-SQRT_HALF, SQRT_HALF, 0.0, 0.0],
        [0.0, 0.0, SQRT_HALF, -SQRT_HALF],
    ],
    dtype=complex,
)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

DEFAULT_DIMENSION_CAP = 4096


class DimensionCapError(ValueError):
    """Raised when a dense qubits+bath construction would be too large."""


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of the qubits+bath model.

    Energies are in units where ``delta`` sets the scale. ``n_modes = 0``
    describes the isolated pair of qubits.
    """

    delta: float = 1.0
    nu: float = -5.0
    alpha: float = 0.01
    omega_c: float = 10.0
    n_modes: int = 40
    n_bos: int = 3
    ohmic_exponent: float = 1.0
    cutoff_kind: CutoffKind = "hard"
    q0: float = 1.0
    spectral_consistent: bool = False

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if self.n_modes < 0:
            raise ValueError(f"n_modes must be non-negative, got {self.n_modes}")
        if self.n_bos < 2:
            raise ValueError(f"n_bos must be at least 2, got {self.n_bos}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.cutoff_kind not in ("hard", "exponential"):
            raise ValueError(f"unknown cutoff_kind {self.cutoff_kind!r}")
        if self.ohmic_exponent <= 0:
            raise ValueError("ohmic_exponent must be positive")

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    @property
    def ratio(self) -> float:
        """Dimensionless interaction ``nu / delta``."""
        return self.nu / self.delta


@dataclass(frozen=True)
class EigenSystem:
    energies: np.ndarray
    a: float
    b: float
    eigenvectors: np.ndarray  # columns are |0>..|3> in the Bell basis


@dataclass(frozen=True)
class BathDiscretization:
    omegas: np.ndarray
    lambdas: np.ndarray

    @property
    def modes(self) -> list[tuple[float, float]]:
        return list(zip(self.omegas.tolist(), self.lambdas.tolist()))

    def __len__(self) -> int:
        return len(self.omegas)


def spectrum(params: ModelParams) -> np.ndarray:
    """Energies ``E_0..E_3`` of the isolated qubits, in eigenstate-label order."""
    half = params.ratio / 2.0
    outer = np.sqrt(1.0 + half**2)
    return params.delta * np.array([-outer, -half, half, outer])


def bell_mixing_coeffs(params: ModelParams) -> tuple[float, float]:
    """Coefficients ``(a, b)`` mixing TAF and TF+ in the outer eigenstates."""
    x = params.ratio
    root = np.sqrt(4.0 + x**2)
    denom = np.sqrt(4.0 + (x + root) ** 2)
    return float(2.0 / denom), float(-(root + x) / denom)


def eigenstates(params: ModelParams) -> np.ndarray:
    """Eigenstates ``|0>..|3>`` as the columns of a 4x4 Bell-basis matrix."""
    a, b = bell_mixing_coeffs(params)
    vecs = np.zeros((4, 4), dtype=complex)
    vecs[TAF, 0], vecs[TFP, 0] = a, -b
    vecs[TFM, 1] = 1.0
    vecs[S, 2] = 1.0
    vecs[TFP, 3], vecs[TAF, 3] = a, b
    return vecs


def eigensystem(params: ModelParams) -> EigenSystem:
    a, b = bell_mixing_coeffs(params)
    return EigenSystem(spectrum(params), a, b, eigenstates(params))


def bell_state(label: str) -> np.ndarray:
    """Amplitude vector of one Bell state, e.g. ``bell_state("TAF")``."""
    vec = np.zeros(4, dtype=complex)
    vec[BELL_LABELS.index(label)] = 1.0
    return vec


def check_state(amplitudes, atol: float = 1e-12) -> np.ndarray:
    """Return ``amplitudes`` as a 4-vector, raising if it is not normalized."""
    vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if vec.shape != (4,):
        raise ValueError(f"expected 4 amplitudes, got shape {vec.shape}")
    norm = np.vdot(vec, vec).real
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state is not normalized: <psi|psi> = {norm!r}")
    return vec


def check_density_matrix(rho, atol: float = 1e-10) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > max(atol, 1e-12):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ValueError(f"density matrix trace is {np.trace(rho)!r}")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def bell_to_computational(obj: np.ndarray) -> np.ndarray:
    """Change basis of a Bell-basis vector or matrix to the computational one."""
    u = BELL_TO_COMPUTATIONAL
    if obj.ndim == 1:
        return u @ obj
    return u @ obj @ u.conj().T


def computational_to_bell(obj: np.ndarray) -> np.ndarray:
    u = BELL_TO_COMPUTATIONAL
    if obj.ndim == 1:
        return u.conj().T @ obj
    return u.conj().T @ obj @ u


def bell_to_energy(rho: np.ndarray, params: ModelParams) -> np.ndarray:
    """Express a Bell-basis density matrix in the energy eigenbasis."""
    v = eigenstates(params)
    return v.conj().T @ rho @ v


def energy_to_bell(rho: np.ndarray, params: ModelParams) -> np.ndarray:
    v = eigenstates(params)
    return v @ rho @ v.conj().T


def qubit_hamiltonian(params: ModelParams) -> np.ndarray:
    """Isolated two-qubit Hamiltonian in the computational basis."""
    x1 = np.kron(PAULI_X, IDENTITY_2)
    x2 = np.kron(IDENTITY_2, PAULI_X)
    zz = np.kron(PAULI_Z, PAULI_Z)
    return -0.5 * params.delta * (x1 + x2) - 0.5 * params.nu * zz


def coupling_operator() -> np.ndarray:
    """System side ``sigma_z^1 + sigma_z^2`` of the qubit-bath coupling."""
    return np.kron(PAULI_Z, IDENTITY_2) + np.kron(IDENTITY_2, PAULI_Z)


def cutoff_function(x: np.ndarray | float, kind: CutoffKind) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind == "hard":
        return np.where(x <= 1.0, 1.0, 0.0)
    return np.exp(-x)


def spectral_density(omega, params: ModelParams):
    """Ohmic-family spectral density ``(alpha/2) omega^s omega_c^(1-s) f(omega/omega_c)``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("spectral density is defined for omega > 0")
    s = params.ohmic_exponent
    value = (
        0.5
        * params.alpha
        * omega**s
        * params.omega_c ** (1.0 - s)
        * cutoff_function(omega / params.omega_c, params.cutoff_kind)
    )
    return value if value.ndim else float(value)


def bath_discretization(params: ModelParams) -> BathDiscretization:
    """Linear frequency grid ``omega_i = i omega_c / N`` and its couplings.

    For the Ohmic hard-cutoff bath the couplings are
    ``lambda_i = (omega_c/N) sqrt(alpha i)``, i.e. ``lambda_i^2 = 2 J(omega_i) d_omega``;
    other exponents and cutoffs reuse that relation. With
    ``spectral_consistent`` the couplings are divided by sqrt(2) so that the
    coarse-grained density equals ``J`` itself.
    """
    n = params.n_modes
    if n < 1:
        raise ValueError("bath discretization needs at least one mode")
    spacing = params.omega_c / n
    index = np.arange(1, n + 1, dtype=float)
    omegas = index * spacing
    if params.ohmic_exponent == 1.0 and params.cutoff_kind == "hard":
        lambdas = spacing * np.sqrt(params.alpha * index)
    else:
        lambdas = np.sqrt(2.0 * spectral_density(omegas, params) * spacing)
    if params.spectral_consistent:
        lambdas = lambdas * SQRT_HALF
    return BathDiscretization(omegas, lambdas)


def boson_operators(n_bos: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated annihilation operator and number operator."""
    a = np.diag(np.sqrt(np.arange(1, n_bos, dtype=float)), k=1).astype(complex)
    return a, np.diag(np.arange(n_bos, dtype=float)).astype(complex)


def full_dimension(params: ModelParams) -> int:
    return 4 * params.n_bos**params.n_modes


def hamiltonian_dense(
    params: ModelParams, dimension_cap: int = DEFAULT_DIMENSION_CAP
) -> np.ndarray:
    """Full qubits+bath Hamiltonian as a dense matrix.

    Tensor order is qubit 1, qubit 2, then the bath modes by increasing
    frequency; each qubit uses the computational basis.
    """
    dim = full_dimension(params)
    if dim > dimension_cap:
        raise DimensionCapError(
            f"full dimension 4*{params.n_bos}^{params.n_modes} = {dim} "
            f"exceeds the cap of {dimension_cap}"
        )
    h_qub = qubit_hamiltonian(params)
    if params.n_modes == 0:
        return h_qub
    bath = bath_discretization(params)
    a, num = boson_operators(params.n_bos)
    x = a + a.conj().T
    bath_dim = params.n_bos**params.n_modes
    eye_bath = np.eye(bath_dim)

    h = np.kron(h_qub, eye_bath)
    h_bath = np.zeros((bath_dim, bath_dim), dtype=complex)
    b_field = np.zeros((bath_dim, bath_dim), dtype=complex)
    for i, (omega, lam) in enumerate(zip(bath.omegas, bath.lambdas)):
        left = np.eye(params.n_bos**i)
        right = np.eye(params.n_bos ** (params.n_modes - i - 1))
        h_bath += omega * np.kron(np.kron(left, num), right)
        b_field += lam * np.kron(np.kron(left, x), right)
    h += np.kron(np.eye(4), h_bath)
    h += np.kron(coupling_operator(), b_field)
    return h
