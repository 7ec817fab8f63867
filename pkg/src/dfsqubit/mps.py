"""Matrix product states and the star-geometry MPO of the qubits+bath chain.

Site layout: qubit 1, qubit 2 (local dimension 2), then the bath modes by
increasing frequency (local dimension ``n_bos``). MPS tensors have index order
``(left bond, physical, right bond)``; MPO tensors ``(left, right, out, in)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import (
    IDENTITY_2,
    PAULI_X,
    PAULI_Z,
    ModelParams,
    bath_discretization,
    bell_to_computational,
    boson_operators,
    check_state,
    computational_to_bell,
)

CHECKPOINT_MAGIC = b"DFSQMPS\0"
CHECKPOINT_VERSION = 1


@dataclass
class MPSState:
    """Mixed-canonical MPS with bookkeeping for truncation and norm drift."""

    tensors: list[np.ndarray]
    ortho_center: int = 0
    trunc_log: float = 0.0
    max_step_discarded: float = 0.0
    norm_drift: list[float] = field(default_factory=list)
    saturated: bool = False

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def physical_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors]

    def copy(self) -> MPSState:
        return MPSState(
            [t.copy() for t in self.tensors],
            self.ortho_center,
            self.trunc_log,
            self.max_step_discarded,
            list(self.norm_drift),
            self.saturated,
        )

    def norm(self) -> float:
        return float(np.sqrt(abs(overlap(self, self))))

    def to_vector(self) -> np.ndarray:
        """Dense state vector; only sensible for tiny chains."""
        vec = self.tensors[0]
        for t in self.tensors[1:]:
            vec = np.tensordot(vec, t, axes=(vec.ndim - 1, 0))
        return vec.reshape(-1)


@dataclass
class MPO:
    tensors: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def bond_dim(self) -> int:
        return max(t.shape[1] for t in self.tensors[:-1]) if len(self.tensors) > 1 else 1

    def to_dense(self) -> np.ndarray:
        """Contract to a dense matrix (tiny chains only)."""
        op = self.tensors[0][0]  # (wr, out, in)
        for w in self.tensors[1:]:
            # op: (v, O, I), w: (v, u, o, i) -> (u, O o, I i)
            op = np.einsum("vab,vuoi->uaobi", op, w)
            u, a, o, b, i = op.shape
            op = op.reshape(u, a * o, b * i)
        return op[0]


def build_mpo(params: ModelParams) -> MPO:
    """MPO of the full Hamiltonian with bond dimension 3.

    Virtual states: 0 = nothing placed yet, 1 = carrying the qubit coupling
    operator (``Z1`` after the first site, ``Z1 + Z2`` afterwards),
    2 = complete term. The constant zero-point shift of the bath is omitted.
    """
    d = params.delta
    hx = -0.5 * d * PAULI_X

    first = np.zeros((1, 3, 2, 2), dtype=complex)
    first[0, 0], first[0, 1], first[0, 2] = IDENTITY_2, PAULI_Z, hx

    zz = -0.5 * params.nu * PAULI_Z
    if params.n_modes == 0:
        second = np.zeros((3, 1, 2, 2), dtype=complex)
        second[0, 0], second[1, 0], second[2, 0] = hx, zz, IDENTITY_2
        return MPO([first, second])

    second = np.zeros((3, 3, 2, 2), dtype=complex)
    second[0, 0], second[0, 1], second[0, 2] = IDENTITY_2, PAULI_Z, hx
    second[1, 1], second[1, 2] = IDENTITY_2, zz
    second[2, 2] = IDENTITY_2

    bath = bath_discretization(params)
    a, num = boson_operators(params.n_bos)
    x = a + a.conj().T
    eye = np.eye(params.n_bos, dtype=complex)
    tensors = [first, second]
    last = params.n_modes - 1
    for i, (omega, lam) in enumerate(zip(bath.omegas, bath.lambdas)):
        if i == last:
            w = np.zeros((3, 1, params.n_bos, params.n_bos), dtype=complex)
            w[0, 0], w[1, 0], w[2, 0] = omega * num, lam * x, eye
        else:
            w = np.zeros((3, 3, params.n_bos, params.n_bos), dtype=complex)
            w[0, 0], w[0, 2] = eye, omega * num
            w[1, 1], w[1, 2] = eye, lam * x
            w[2, 2] = eye
        tensors.append(w)
    return MPO(tensors)


def init_product_state(state0, params: ModelParams) -> MPSState:
    """``state0`` (Bell amplitudes) times the bath vacuum, canonical at site 0."""
    psi = bell_to_computational(check_state(state0)).reshape(2, 2)
    u, s, vh = np.linalg.svd(psi)
    keep = max(1, int(np.sum(s > 1e-14 * s[0])))
    first = (u[:, :keep] * s[:keep]).reshape(1, 2, keep)
    second = vh[:keep, :].reshape(keep, 2, 1)
    vacuum = np.zeros((1, params.n_bos, 1), dtype=complex)
    vacuum[0, 0, 0] = 1.0
    tensors = [first.astype(complex), second.astype(complex)]
    tensors += [vacuum.copy() for _ in range(params.n_modes)]
    return MPSState(tensors, ortho_center=0)


def transfer_right(ket: np.ndarray, env: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """Absorb one site into a right overlap environment ``env[b_ket, b_bra]``."""
    t = np.tensordot(ket, env, axes=(2, 0))  # (a, s, b')
    return np.tensordot(t, bra.conj(), axes=([1, 2], [1, 2]))  # (a, a')


def bath_environment(ket: MPSState, bra: MPSState, start: int = 2) -> np.ndarray:
    env = np.ones((1, 1), dtype=complex)
    for k in range(len(ket) - 1, start - 1, -1):
        env = transfer_right(ket.tensors[k], env, bra.tensors[k])
    return env


def overlap(ket: MPSState, bra: MPSState) -> complex:
    """``<bra|ket>``."""
    env = bath_environment(ket, bra, start=0)
    return complex(env[0, 0])


def reduced_cross(ket: MPSState, bra: MPSState) -> np.ndarray:
    """``Tr_bath |ket><bra|`` in the computational two-qubit basis."""
    env = bath_environment(ket, bra)
    theta_k = np.tensordot(ket.tensors[0], ket.tensors[1], axes=(2, 0)).reshape(4, -1)
    theta_b = np.tensordot(bra.tensors[0], bra.tensors[1], axes=(2, 0)).reshape(4, -1)
    return theta_k @ env @ theta_b.conj().T


def reduced_two_qubit_dm(mps: MPSState) -> np.ndarray:
    """Reduced density matrix of the two qubits in the Bell basis, unit trace."""
    rho = reduced_cross(mps, mps)
    rho = 0.5 * (rho + rho.conj().T)
    return computational_to_bell(rho / np.trace(rho).real)


def expectation(mps: MPSState, mpo: MPO) -> complex:
    """``<psi|H|psi> / <psi|psi>`` by a left-to-right contraction."""
    env = np.ones((1, 1, 1), dtype=complex)  # (bra, mpo, ket)
    for a, w in zip(mps.tensors, mpo.tensors):
        t = np.tensordot(env, a, axes=(2, 0))
        t = np.tensordot(t, w, axes=([1, 2], [0, 3]))
        env = np.tensordot(a.conj(), t, axes=([0, 1], [0, 3])).transpose(0, 2, 1)
    return complex(env[0, 0, 0]) / overlap(mps, mps)


def save_checkpoint(mps: MPSState, path: str | Path) -> None:
    """Write a versioned little-endian binary snapshot of ``mps``."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<III", CHECKPOINT_VERSION, len(mps), mps.ortho_center))
        fh.write(struct.pack("<dd?", mps.trunc_log, mps.max_step_discarded, mps.saturated))
        for t in mps.tensors:
            fh.write(struct.pack("<III", *t.shape))
        for t in mps.tensors:
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_checkpoint(path: str | Path) -> MPSState:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path} is not an MPS checkpoint")
    pos = len(CHECKPOINT_MAGIC)
    version, n_sites, center = struct.unpack_from("<III", data, pos)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    pos += 12
    trunc_log, max_disc, saturated = struct.unpack_from("<dd?", data, pos)
    pos += struct.calcsize("<dd?")
    shapes = []
    for _ in range(n_sites):
        shapes.append(struct.unpack_from("<III", data, pos))
        pos += 12
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<c16", count=count, offset=pos).reshape(shape)
        tensors.append(arr.astype(complex))
        pos += 16 * count
    return MPSState(tensors, center, trunc_log, max_disc, [], bool(saturated))


def reduced_from_vector(vec: np.ndarray, bath_dim: int) -> np.ndarray:
    m = vec.reshape(4, bath_dim)
    return computational_to_bell(m @ m.conj().T)
