"""Logical qubits built from Bell-state superpositions of the two physical qubits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import BELL_LABELS, S, TAF, TFM, TFP, bell_to_computational, check_state

STRATEGY_NAMES = ("AF", "SYMM", "NSYMM", "OPTSYMM", "OPTNSYMM", "PHYSICAL")
BUILTIN_STRATEGIES = ("AF", "SYMM", "NSYMM")


@dataclass(frozen=True)
class EncodingStrategy:
    """Logical up/down states as Bell-basis amplitude vectors.

    ``PHYSICAL`` is a sentinel with no amplitudes: metrics reduce to qubit 1.
    """

    name: str
    up: np.ndarray | None = None
    down: np.ndarray | None = None

    @property
    def is_physical(self) -> bool:
        return self.name == "PHYSICAL"

    @property
    def label(self) -> str:
        return self.name

    def require_logical(self) -> None:
        if self.is_physical:
            raise ValueError("PHYSICAL strategy has no logical operators")


def _real_vector(**amps: float) -> np.ndarray:
    vec = np.zeros(4, dtype=complex)
    for key, value in amps.items():
        vec[{"S": S, "TAF": TAF, "TFP": TFP, "TFM": TFM}[key]] = value
    return vec


def _complete(fixed: complex, what: str) -> float:
    rest = 1.0 - abs(fixed) ** 2
    if rest < -1e-12:
        raise ValueError(f"{what} amplitude {fixed!r} exceeds unit modulus")
    return math.sqrt(max(rest, 0.0))


def strategy(name: str, *params: complex) -> EncodingStrategy:
    """Build an encoding strategy.

    Parametric forms take amplitudes, not squared moduli:
    ``strategy("OPTSYMM", l_s, k_tfp)`` and ``strategy("OPTNSYMM", k_tfp)``.
    """
    name = name.upper()
    if name == "AF":
        up, down = _real_vector(S=1.0), _real_vector(TAF=1.0)
        label = name
    elif name == "SYMM":
        up = _real_vector(S=math.sqrt(3) / 2, TAF=0.5)
        down = _real_vector(TFP=0.5, TFM=math.sqrt(3) / 2)
        label = name
    elif name == "NSYMM":
        third = 1.0 / math.sqrt(3)
        up, down = _real_vector(S=1.0), _real_vector(TAF=third, TFP=third, TFM=third)
        label = name
    elif name == "OPTSYMM":
        if len(params) != 2:
            raise ValueError("OPTSYMM takes (l_S, k_TF+)")
        l_s, k_p = params
        up = _real_vector(S=l_s, TAF=_complete(l_s, "l_S"))
        down = _real_vector(TFP=k_p, TFM=_complete(k_p, "k_TF+"))
        label = f"OPTSYMM({_fmt(l_s)},{_fmt(k_p)})"
    elif name == "OPTNSYMM":
        if len(params) != 1:
            raise ValueError("OPTNSYMM takes (k_TF+,)")
        (k_p,) = params
        if not 0 < abs(k_p) < math.sqrt(0.5):
            raise ValueError("OPTNSYMM needs 0 < k_TF+ < 1/sqrt(2)")
        k_af = math.sqrt(1.0 - 2 * abs(k_p) ** 2)
        up, down = _real_vector(S=1.0), _real_vector(TAF=k_af, TFP=k_p, TFM=k_p)
        label = f"OPTNSYMM({_fmt(k_p)})"
    elif name == "PHYSICAL":
        return EncodingStrategy("PHYSICAL")
    else:
        raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}")
    if any(np.iscomplexobj(p) and np.imag(p) != 0 for p in params):
        warnings.warn("complex strategy coefficients are experimental", stacklevel=2)
    return from_amplitudes(label, up, down)


def _fmt(x: complex) -> str:
    return f"{np.real(x):.6g}" if np.imag(x) == 0 else f"{x:.6g}"


def from_amplitudes(name: str, up, down, atol: float = 1e-12) -> EncodingStrategy:
    up = np.asarray(up, dtype=complex)
    down = np.asarray(down, dtype=complex)
    for vec, which in ((up, "up"), (down, "down")):
        if abs(np.vdot(vec, vec).real - 1.0) > atol:
            raise ValueError(f"logical {which} state is not normalized")
    if abs(np.vdot(up, down)) > atol:
        raise ValueError("logical up and down states are not orthogonal")
    return EncodingStrategy(name, up, down)


def parse_strategy(spec: str) -> EncodingStrategy:
    """Parse ``"AF"``, ``"OPTSYMM(0.866,0.5)"`` or ``"OPTNSYMM(0.577)"``."""
    spec = spec.strip()
    if "(" not in spec:
        return strategy(spec)
    head, _, rest = spec.partition("(")
    args = [float(x) for x in rest.rstrip(")").split(",") if x.strip()]
    return strategy(head, *args)


def encoded_paulis(s: EncodingStrategy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Logical ``sigma_x, sigma_y, sigma_z`` as 4x4 Bell-basis operators."""
    s.require_logical()
    ud = np.outer(s.up, s.down.conj())
    du = ud.conj().T
    sx = ud + du
    sy = -1j * ud + 1j * du
    sz = np.outer(s.up, s.up.conj()) - np.outer(s.down, s.down.conj())
    return sx, sy, sz


def projector(s: EncodingStrategy) -> np.ndarray:
    """Projector onto the span of the logical up and down states."""
    s.require_logical()
    return np.outer(s.up, s.up.conj()) + np.outer(s.down, s.down.conj())


@dataclass(frozen=True)
class EncodedState:
    matrix: np.ndarray
    bloch: np.ndarray

    @property
    def physicality(self) -> float:
        """Smallest eigenvalue of the encoded matrix (negative means unphysical)."""
        return float(np.linalg.eigvalsh(self.matrix).min())


def encoded_dm(rho: np.ndarray, s: EncodingStrategy) -> EncodedState:
    """Encoded 2x2 state from the logical Pauli expectation values of ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    x, y, z = (np.trace(op @ rho).real for op in encoded_paulis(s))
    matrix = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=complex)
    return EncodedState(matrix, np.array([x, y, z]))


def physical_qubit_dm(rho: np.ndarray) -> np.ndarray:
    """Reduced state of qubit 1 from a Bell-basis two-qubit density matrix."""
    comp = bell_to_computational(np.asarray(rho, dtype=complex)).reshape(2, 2, 2, 2)
    return np.einsum("ajbj->ab", comp)


def logical_state_matrix(rho: np.ndarray, s: EncodingStrategy) -> np.ndarray:
    """2x2 state compared by the metrics: encoded for logical strategies, qubit 1 otherwise."""
    if s.is_physical:
        return physical_qubit_dm(rho)
    return encoded_dm(rho, s).matrix


def logical_initial_state(s: EncodingStrategy, theta: float, phi: float) -> np.ndarray:
    """``cos(theta) |up_L> + exp(i phi) sin(theta) |down_L>``."""
    s.require_logical()
    psi = math.cos(theta) * s.up + np.exp(1j * phi) * math.sin(theta) * s.down
    return check_state(psi)


def logical_coordinates(state, s: EncodingStrategy) -> np.ndarray:
    """Components of a two-qubit state along the logical up and down states."""
    s.require_logical()
    return np.array([np.vdot(s.up, state), np.vdot(s.down, state)])


def describe(s: EncodingStrategy) -> str:
    if s.is_physical:
        return "PHYSICAL: qubit 1"
    parts = []
    for vec, tag in ((s.up, "up"), (s.down, "down")):
        terms = [f"{v.real:+.4f}|{lab}>" for v, lab in zip(vec, BELL_LABELS) if abs(v) > 0]
        parts.append(f"{tag}=" + " ".join(terms))
    return f"{s.name}: " + ", ".join(parts)
