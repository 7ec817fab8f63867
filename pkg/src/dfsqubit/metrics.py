"""Fidelity, purity, leakage and ensemble statistics."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .encoding import EncodingStrategy, projector

NEGATIVE_EIGENVALUE_TOL = 1e-10


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix.

    Negative eigenvalues down to ``-1e-10`` are floored at zero, as are
    positive ones below the resolution of the eigensolver: their square roots
    would otherwise inject ``~1e-8`` noise into rank-deficient inputs.
    """
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    if evals.min() < -NEGATIVE_EIGENVALUE_TOL:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {evals.min():.3g})")
    resolution = 4 * len(evals) * np.finfo(float).eps * max(evals.max(), 0.0)
    evals = np.where(evals > resolution, evals, 0.0)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def _pure_vector(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray | None:
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if abs(evals[-1] - 1.0) < tol and np.all(np.abs(evals[:-1]) < tol):
        return evecs[:, -1]
    return None


def uhlmann_fidelity(rho_a: np.ndarray, rho_b: np.ndarray, use_pure_shortcut: bool = True) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)) = ||sqrt(rho_a) sqrt(rho_b)||_1``.

    When ``rho_b`` is pure this reduces to ``sqrt(<psi|rho_a|psi>)``, which is
    what is evaluated if ``use_pure_shortcut`` is set.

    Raises:
        ValueError: on shape mismatch or inputs with eigenvalues below ``-1e-10``.
    """
    rho_a = np.asarray(rho_a, dtype=complex)
    rho_b = np.asarray(rho_b, dtype=complex)
    if rho_a.shape != rho_b.shape:
        raise ValueError(f"shape mismatch {rho_a.shape} vs {rho_b.shape}")
    sqrt_a = _psd_sqrt(rho_a)
    if use_pure_shortcut:
        psi = _pure_vector(rho_b)
        if psi is not None:
            return math.sqrt(max(np.vdot(psi, rho_a @ psi).real, 0.0))
    # trace norm of sqrt(a) sqrt(b): singular values avoid square-rooting
    # the roundoff eigenvalues of sqrt(a) b sqrt(a)
    return float(np.sum(np.linalg.svd(sqrt_a @ _psd_sqrt(rho_b), compute_uv=False)))


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.einsum("ij,ji->", rho, rho).real)


def leakage(s: EncodingStrategy, rho0: np.ndarray, rho_t: np.ndarray) -> float:
    """Normalized loss of logical-subspace population between ``rho0`` and ``rho_t``.

    Negative values mean population flowed into the logical subspace.
    """
    proj = projector(s)
    before = abs(np.trace(proj @ rho0))
    after = abs(np.trace(proj @ rho_t))
    return float((before - after) / (2 * math.sqrt(2)))


def mean_outer_product(states: Sequence[np.ndarray]) -> np.ndarray:
    if len(states) == 0:
        raise ValueError("need at least one state")
    vecs = np.asarray(states, dtype=complex)
    return np.einsum("ki,kj->ij", vecs, vecs.conj()) / len(vecs)


def sampling_faithfulness(states: Sequence[np.ndarray], target_dim: int | None = None) -> float:
    """Frobenius distance between the ensemble's mean projector and the maximally mixed state."""
    mean = mean_outer_product(states)
    dim = target_dim or mean.shape[0]
    if dim != mean.shape[0]:
        raise ValueError(f"states have dimension {mean.shape[0]}, target is {dim}")
    return float(np.linalg.norm(mean - np.eye(dim) / dim))


@dataclass(frozen=True)
class TimeSeries:
    """Per-realization metric trajectories with their population mean and std."""

    name: str
    times: np.ndarray
    per_realization: np.ndarray  # (n_realizations, n_times)
    mean: np.ndarray
    std: np.ndarray

    std_convention = "population"


def aggregate(name: str, times, trajectories) -> TimeSeries:
    """Mean and population standard deviation per time point.

    Rows are sorted before reduction, so the result does not depend on the
    order in which realizations are supplied.
    """
    times = np.asarray(times, dtype=float)
    data = np.asarray(trajectories, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(times):
        raise ValueError(f"trajectories of shape {data.shape} do not match {len(times)} times")
    ordered = np.sort(data, axis=0)
    n = ordered.shape[0]
    mean = np.zeros(len(times))
    for row in ordered:
        mean += row
    mean /= n
    var = np.zeros(len(times))
    for row in ordered:
        var += (row - mean) ** 2
    std = np.sqrt(var / n)
    return TimeSeries(name, times, data, mean, std)
