"""Deterministic initial-state ensembles."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGNITUDE_SQ_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
# exact unit phases for 0, pi/2, pi, 3pi/2: no rounding noise in the amplitudes
PHASE_LEVELS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
GAUGE_RULE = "first-nonzero-real"


@dataclass(frozen=True)
class SampleGridSpec:
    magnitude_sq_levels: tuple[float, ...] = MAGNITUDE_SQ_LEVELS
    phase_levels: tuple[complex, ...] = PHASE_LEVELS
    gauge_rule: str = GAUGE_RULE


def _magnitude_compositions():
    """Squared-magnitude tuples from the level grid summing exactly to one."""
    quarters = range(5)
    for combo in itertools.product(quarters, repeat=4):
        if sum(combo) == 4:
            yield combo


def enumerate_bell_grid() -> list[np.ndarray]:
    """The 332 discretized two-qubit states in Bell-basis amplitudes.

    Zero amplitudes carry no phase and the first nonzero amplitude is real and
    positive. Order is lexicographic in squared magnitudes (``d_S`` first,
    descending), then in the phase indices of the remaining nonzero amplitudes.
    """
    states = []
    for combo in sorted(_magnitude_compositions(), reverse=True):
        mags = [math.sqrt(q / 4) for q in combo]
        nonzero = [i for i, q in enumerate(combo) if q]
        free = nonzero[1:]
        for phases in itertools.product(range(4), repeat=len(free)):
            vec = np.array(mags, dtype=complex)
            for idx, ph in zip(free, phases):
                vec[idx] = mags[idx] * PHASE_LEVELS[ph]
            states.append(vec)
    return states


def stratum_counts(states) -> dict[float, int]:
    """Number of states per ``|d_S|^2`` level."""
    counts = {level: 0 for level in sorted(MAGNITUDE_SQ_LEVELS, reverse=True)}
    for vec in states:
        level = min(MAGNITUDE_SQ_LEVELS, key=lambda q: abs(q - abs(vec[0]) ** 2))
        counts[level] += 1
    return counts


LOGICAL_THETAS = (math.pi / 8, math.pi / 4, 3 * math.pi / 8)
LOGICAL_PHIS = tuple(k * math.pi / 3 for k in range(6))


def logical_grid() -> list[tuple[float, float]]:
    """18 ``(theta, phi)`` pairs whose logical states average to ``I/2``."""
    return [(theta, phi) for theta in LOGICAL_THETAS for phi in LOGICAL_PHIS]


def logical_grid_vectors() -> list[np.ndarray]:
    """The logical grid as 2-vectors ``(cos theta, e^{i phi} sin theta)``."""
    return [
        np.array([math.cos(theta), np.exp(1j * phi) * math.sin(theta)])
        for theta, phi in logical_grid()
    ]


def thin(states: list, every: int) -> list:
    """Keep every ``every``-th realization, preserving order."""
    return states[::every]


def write_ensemble_csv(states, path: str | Path) -> None:
    """Write ``index`` and the real/imaginary parts of the four amplitudes."""
    header = ["index"]
    for label in ("S", "TAF", "TFp", "TFm"):
        header += [f"re_{label}", f"im_{label}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, vec in enumerate(states):
            row = [i]
            for amp in vec:
                row += [f"{amp.real:.17g}", f"{amp.imag:.17g}"]
            writer.writerow(row)


def read_ensemble_csv(path: str | Path) -> list[np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        states = []
        for row in reader:
            vals = [float(x) for x in row[1:]]
            states.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    return states
