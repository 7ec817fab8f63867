"""Markovian (Lindblad) description of the qubits in the zero-temperature bath.

All density matrices here are 4x4 arrays in the energy eigenbasis of the
isolated qubits (labels ``0..3`` of :func:`dfsqubit.model.eigenstates`).
Closed forms are in the interaction picture; :func:`to_schrodinger` restores
the free phases.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .model import ModelParams, bell_mixing_coeffs, spectral_density, spectrum

UNSPECIFIED_COHERENCES = ((0, 2), (1, 2), (2, 3))
TRACKED_ELEMENTS = ((0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (0, 3), (1, 3))


class UnspecifiedCoherenceWarning(UserWarning):
    pass


class StepSizeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LindbladRates:
    gamma: float
    gamma_01: float
    gamma_13: float
    c: float
    c_alt: float


def decay_constant(params: ModelParams) -> tuple[float, float]:
    """Both closed forms of the constant ``c`` entering ``gamma = 2 pi alpha c``."""
    a, b = bell_mixing_coeffs(params)
    root = math.sqrt(4.0 * params.delta**2 + params.nu**2)
    return a**2 * (root + params.nu), b**2 * (root - params.nu)


def decay_rate(params: ModelParams) -> LindbladRates:
    """Decay rates of the two jump channels ``|1>-><0|`` and ``|3>-><1|``.

    ``gamma_01`` and ``gamma_13`` use the exponential-cutoff spectral density
    at finite ``omega_c``; ``gamma`` is their common ``omega_c -> inf`` limit.
    """
    a, b = bell_mixing_coeffs(params)
    energies = spectrum(params)
    c, c_alt = decay_constant(params)
    exp_params = params.replace(cutoff_kind="exponential")
    if params.alpha == 0:
        g01 = g13 = 0.0
    else:
        g01 = 4 * b**2 * 2 * math.pi * spectral_density(energies[1] - energies[0], exp_params)
        g13 = 4 * a**2 * 2 * math.pi * spectral_density(energies[3] - energies[1], exp_params)
    return LindbladRates(
        gamma=2 * math.pi * params.alpha * c,
        gamma_01=float(g01),
        gamma_13=float(g13),
        c=c,
        c_alt=c_alt,
    )


def analytic_density(
    rho0: np.ndarray,
    rates: LindbladRates | float,
    t: float,
    allow_unspecified_coherences: bool = False,
) -> np.ndarray:
    """Closed-form interaction-picture solution with a single decay rate.

    Coherences ``rho_02``, ``rho_12`` and ``rho_23`` have no closed form here.
    Inputs where they are nonzero are rejected unless
    ``allow_unspecified_coherences`` is set, in which case those entries are
    returned unchanged and an :class:`UnspecifiedCoherenceWarning` is emitted.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    gamma = rates.gamma if isinstance(rates, LindbladRates) else float(rates)
    untracked = max(abs(rho0[i, j]) for i, j in UNSPECIFIED_COHERENCES)
    if untracked > 1e-14:
        if not allow_unspecified_coherences:
            raise ValueError(
                "rho0 has nonzero rho_02/rho_12/rho_23 coherences "
                f"(max |.| = {untracked:.3g}); pass allow_unspecified_coherences=True"
            )
        warnings.warn(
            "rho_02, rho_12, rho_23 returned unchanged", UnspecifiedCoherenceWarning, stacklevel=2
        )

    gt = gamma * t
    decay = math.exp(-gt)
    half = math.exp(-gt / 2)
    rho = rho0.copy()
    p1, p2, p3 = rho0[1, 1].real, rho0[2, 2].real, rho0[3, 3].real
    rho[0, 0] = 1.0 - p1 * decay - p2 - p3 * decay * (1.0 + gt)
    rho[1, 1] = p1 * decay + p3 * decay * gt
    rho[2, 2] = p2
    rho[3, 3] = p3 * decay
    rho[0, 1] = rho0[0, 1] * half
    rho[0, 3] = rho0[0, 3] * half
    rho[1, 3] = rho0[1, 3] * decay
    for i, j in ((0, 1), (0, 3), (1, 3)):
        rho[j, i] = np.conj(rho[i, j])
    return rho


def to_schrodinger(rho: np.ndarray, params: ModelParams, t: float) -> np.ndarray:
    """Apply the free phases ``exp(-i (E_i - E_j) t)`` to an interaction-picture matrix."""
    phase = np.exp(-1j * spectrum(params) * t)
    return phase[:, None] * rho * phase.conj()[None, :]


def to_interaction(rho: np.ndarray, params: ModelParams, t: float) -> np.ndarray:
    phase = np.exp(1j * spectrum(params) * t)
    return phase[:, None] * rho * phase.conj()[None, :]


def analytic_bell_fidelity(
    initial: str, params: ModelParams, t: float, same_picture: bool = False
) -> float:
    """Fidelity between open (Lindblad) and closed evolution of a Bell state.

    ``initial`` is one of ``"TF-"``, ``"TF+"``, ``"TAF"`` or ``"S"``. The
    default formulas compare the closed state in the Schrodinger picture with
    the open state in the interaction picture, which produces the oscillating
    ``cos((E_0 - E_3) t)`` term; ``same_picture=True`` removes the phase
    mismatch (the cosine becomes 1).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if initial == "S":
        return 1.0
    gamma = decay_rate(params).gamma
    gt = gamma * t
    if initial == "TF-":
        return math.exp(-gt / 2)
    a, b = bell_mixing_coeffs(params)
    energies = spectrum(params)
    osc = 1.0 if same_picture else math.cos((energies[0] - energies[3]) * t)
    cross = 2 * a**2 * b**2 * math.exp(-gt / 2) * osc
    if initial == "TF+":
        value = b**2 + (a**4 - a**2 * b**2 * (1 + gt)) * math.exp(-gt) + cross
    elif initial == "TAF":
        value = a**2 + (b**4 - a**2 * b**2 * (1 + gt)) * math.exp(-gt) + cross
    else:
        raise ValueError(f"unsupported initial Bell state {initial!r}")
    return math.sqrt(max(value, 0.0))


def _jump_operators(rates: LindbladRates, channel_rates: str) -> list[tuple[float, np.ndarray]]:
    if channel_rates == "single":
        g01 = g13 = rates.gamma
    elif channel_rates == "cutoff":
        g01, g13 = rates.gamma_01, rates.gamma_13
    else:
        raise ValueError(f"channel_rates must be 'single' or 'cutoff', got {channel_rates!r}")
    l01 = np.zeros((4, 4), dtype=complex)
    l01[0, 1] = 1.0
    l13 = np.zeros((4, 4), dtype=complex)
    l13[1, 3] = 1.0
    return [(g01, l01), (g13, l13)]


def lindblad_rhs(rho: np.ndarray, jumps, hamiltonian: np.ndarray | None = None) -> np.ndarray:
    out = np.zeros_like(rho)
    if hamiltonian is not None:
        out -= 1j * (hamiltonian @ rho - rho @ hamiltonian)
    for rate, op in jumps:
        if rate == 0:
            continue
        op_dag = op.conj().T
        n = op_dag @ op
        out += rate * (op @ rho @ op_dag - 0.5 * (n @ rho + rho @ n))
    return out


def rk4_lindblad(
    rho0: np.ndarray,
    params: ModelParams,
    dt: float,
    t_final: float,
    channel_rates: Literal["single", "cutoff"] = "single",
    picture: Literal["interaction", "schrodinger"] = "interaction",
) -> list[np.ndarray]:
    """Integrate the master equation with classical fixed-step RK4.

    Returns the states at ``t = 0, dt, ..., t_final``. A
    :class:`StepSizeWarning` is emitted when ``dt > 0.1/gamma``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if picture not in ("interaction", "schrodinger"):
        raise ValueError(f"picture must be 'interaction' or 'schrodinger', got {picture!r}")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError("t_final must be an integer multiple of dt")
    rates = decay_rate(params)
    jumps = _jump_operators(rates, channel_rates)
    gamma_max = max(rate for rate, _ in jumps)
    if gamma_max * dt > 0.1:
        local_err = (gamma_max * dt) ** 5 / 120.0
        warnings.warn(
            f"dt={dt} exceeds 0.1/gamma; estimated local error ~{local_err:.1e}",
            StepSizeWarning,
            stacklevel=2,
        )
    ham = np.diag(spectrum(params)).astype(complex) if picture == "schrodinger" else None

    rho = np.array(rho0, dtype=complex)
    out = [rho.copy()]
    for _ in range(n_steps):
        k1 = lindblad_rhs(rho, jumps, ham)
        k2 = lindblad_rhs(rho + 0.5 * dt * k1, jumps, ham)
        k3 = lindblad_rhs(rho + 0.5 * dt * k2, jumps, ham)
        k4 = lindblad_rhs(rho + dt * k3, jumps, ham)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(rho.copy())
    return out
