"""Two-site TDVP time evolution of the qubits+bath MPS.

One time step is a symmetric left-right-left sweep pair, each sweep advancing
by ``dt/2``. Local exponentials are computed with a Lanczos series that stops
once the two most recent Krylov vectors contribute less than ``krylov_tol``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .model import ModelParams, computational_to_bell
from .mps import (
    MPO,
    MPSState,
    build_mpo,
    init_product_state,
    reduced_cross,
    reduced_two_qubit_dm,
)

log = logging.getLogger(__name__)


class SaturationWarning(UserWarning):
    """Bond dimension hit ``d_max`` while discarding more than the threshold."""


class LongRunWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TdvpOptions:
    dt: float = 0.05
    krylov_tol: float = 1e-12
    trunc_threshold: float = 1e-13
    d_max: int = 50
    t_final: float = 30.0
    krylov_max: int = 80

    def __post_init__(self) -> None:
        for name in ("dt", "krylov_tol", "trunc_threshold", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.d_max < 1 or self.krylov_max < 2:
            raise ValueError("d_max and krylov_max must be positive")

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_final / self.dt))
        if abs(n * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError("t_final must be an integer multiple of dt")
        return n


def expm_krylov(matvec, v: np.ndarray, tau: complex, tol: float, max_iter: int = 80) -> np.ndarray:
    """Approximate ``exp(tau H) v`` for Hermitian ``H`` with a Lanczos series.

    The series is truncated when the combined weight of the two most recent
    Krylov vectors in the result drops below ``tol`` (relative to ``|v|``),
    or on an invariant subspace.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy()
    n_max = min(max_iter, v.size)
    basis = np.empty((n_max, v.size), dtype=complex)
    basis[0] = v / beta0
    tri = np.zeros((n_max, n_max))
    coeffs = np.ones(1, dtype=complex)
    for k in range(n_max):
        w = matvec(basis[k])
        # Gram-Schmidt against the whole basis, twice, instead of the bare
        # three-term recurrence: the basis stays orthonormal to machine precision
        q = basis[: k + 1]
        h = (q @ w.conj()).conj()
        w = w - h @ q
        w = w - (q @ w.conj()).conj() @ q
        tri[k, k] = h[k].real
        evals, evecs = np.linalg.eigh(tri[: k + 1, : k + 1])
        coeffs = evecs @ (np.exp(tau * evals) * evecs[0].conj())
        if k >= 1 and abs(coeffs[-1]) + abs(coeffs[-2]) < tol:
            break
        beta = np.linalg.norm(w)
        if beta < 1e-13 or k == n_max - 1:
            break
        tri[k, k + 1] = tri[k + 1, k] = beta
        basis[k + 1] = w / beta
    return beta0 * (coeffs @ basis[: len(coeffs)])


def _left_update(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    t = np.tensordot(env, a, axes=(2, 0))  # (a', w, s, b)
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))  # (a', b, v, s')
    return np.tensordot(a.conj(), t, axes=([0, 1], [0, 3])).transpose(0, 2, 1)


def _right_update(env: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    t = np.tensordot(b, env, axes=(2, 2))  # (a, s, b', v)
    t = np.tensordot(t, w, axes=([1, 3], [3, 1]))  # (a, b', w, s')
    return np.tensordot(b.conj(), t, axes=([1, 2], [3, 1])).transpose(0, 2, 1)


def _apply_one_site(left, w, right, a):
    t = np.tensordot(left, a, axes=(2, 0))
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))  # (a', b, v, s')
    return np.tensordot(t, right, axes=([1, 2], [2, 1]))  # (a', s', b')


def _apply_two_site(left, w12, right, theta):
    t = np.tensordot(left, theta, axes=(2, 0))  # (a', w, s1, s2, b)
    t = np.tensordot(t, w12, axes=([1, 2, 3], [0, 4, 5]))  # (a', b, v, s1', s2')
    return np.tensordot(t, right, axes=([1, 2], [2, 1]))  # (a', s1', s2', b')


def truncated_svd(matrix: np.ndarray, threshold: float, d_max: int):
    """SVD keeping the fewest singular values whose discarded weight is <= threshold.

    Returns ``(u, s, vh, discarded_weight, saturated)``.
    """
    try:
        u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
    weights = s**2
    # tail[k] = weight discarded when keeping k values
    tail = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])
    keep = int(np.argmax(tail <= threshold))
    keep = max(keep, 1)
    saturated = False
    if keep > d_max:
        keep = d_max
        saturated = True
    return u[:, :keep], s[:keep], vh[:keep], float(tail[keep]), saturated


class Tdvp2:
    """Stateful two-site TDVP integrator for one MPS.

    The MPS is kept with its orthogonality centre at site 0 between steps.
    """

    def __init__(self, mps: MPSState, mpo: MPO, opts: TdvpOptions):
        if len(mps) != len(mpo):
            raise ValueError("MPS and MPO lengths differ")
        if len(mps) < 2:
            raise ValueError("two-site TDVP needs at least two sites")
        self.mps = mps
        self.mpo = mpo
        self.opts = opts
        self._w12 = [
            np.tensordot(mpo.tensors[j], mpo.tensors[j + 1], axes=(1, 0)).transpose(0, 3, 1, 4, 2, 5)
            for j in range(len(mpo) - 1)
        ]
        self._warned = False
        self._canonicalize_to_first()
        n = len(mps)
        self.left = [None] * n
        self.right = [None] * n
        self.left[0] = np.ones((1, 1, 1), dtype=complex)
        self.right[n - 1] = np.ones((1, 1, 1), dtype=complex)
        for j in range(n - 1, 0, -1):
            self.right[j - 1] = _right_update(self.right[j], mps.tensors[j], mpo.tensors[j])

    def _canonicalize_to_first(self) -> None:
        tensors = self.mps.tensors
        for j in range(len(tensors) - 1, 0, -1):
            a = tensors[j]
            dl, d, dr = a.shape
            q, r = scipy.linalg.qr(a.reshape(dl, d * dr).T, mode="economic")
            tensors[j] = q.T.reshape(-1, d, dr)
            tensors[j - 1] = np.tensordot(tensors[j - 1], r.T, axes=(2, 0))
        self.mps.ortho_center = 0

    def _evolve_one(self, j: int, delta: complex) -> None:
        left, w, right = self.left[j], self.mpo.tensors[j], self.right[j]
        a = self.mps.tensors[j]
        shape = a.shape

        def matvec(x):
            return _apply_one_site(left, w, right, x.reshape(shape)).reshape(-1)

        self.mps.tensors[j] = expm_krylov(
            matvec, a.reshape(-1), delta, self.opts.krylov_tol, self.opts.krylov_max
        ).reshape(shape)

    def _evolve_two(self, j: int, delta: complex) -> np.ndarray:
        a, b = self.mps.tensors[j], self.mps.tensors[j + 1]
        theta = np.tensordot(a, b, axes=(2, 0))
        shape = theta.shape
        left, w12, right = self.left[j], self._w12[j], self.right[j + 1]

        def matvec(x):
            return _apply_two_site(left, w12, right, x.reshape(shape)).reshape(-1)

        theta = expm_krylov(
            matvec, theta.reshape(-1), delta, self.opts.krylov_tol, self.opts.krylov_max
        )
        return theta.reshape(shape)

    def _split(self, theta: np.ndarray, absorb: str) -> tuple[np.ndarray, np.ndarray, float]:
        dl, d1, d2, dr = theta.shape
        u, s, vh, discarded, saturated = truncated_svd(
            theta.reshape(dl * d1, d2 * dr), self.opts.trunc_threshold, self.opts.d_max
        )
        if saturated:
            self.mps.saturated = True
        k = len(s)
        if absorb == "right":
            left = u.reshape(dl, d1, k)
            right = (s[:, None] * vh).reshape(k, d2, dr)
        else:
            left = (u * s).reshape(dl, d1, k)
            right = vh.reshape(k, d2, dr)
        return left, right, discarded

    def sweep(self, delta: complex) -> float:
        """Left-right then right-left sweep, each applying ``exp(delta H)`` piecewise."""
        n = len(self.mps)
        mpo = self.mpo.tensors
        tensors = self.mps.tensors
        discarded = 0.0
        for j in range(n - 1):
            theta = self._evolve_two(j, delta)
            tensors[j], tensors[j + 1], disc = self._split(theta, "right")
            discarded += disc
            self.left[j + 1] = _left_update(self.left[j], tensors[j], mpo[j])
            if j < n - 2:
                self._evolve_one(j + 1, -delta)
        for j in range(n - 2, -1, -1):
            theta = self._evolve_two(j, delta)
            tensors[j], tensors[j + 1], disc = self._split(theta, "left")
            discarded += disc
            self.right[j] = _right_update(self.right[j + 1], tensors[j + 1], mpo[j + 1])
            if j > 0:
                self._evolve_one(j, -delta)
        return discarded

    def step(self) -> None:
        """Advance by ``dt`` (two half-step sweeps) and renormalize."""
        delta = -0.5j * self.opts.dt
        discarded = self.sweep(delta)
        center = self.mps.tensors[0]
        norm = np.linalg.norm(center)
        self.mps.tensors[0] = center / norm
        self.mps.norm_drift.append(abs(norm - 1.0))
        self.mps.trunc_log += discarded
        self.mps.max_step_discarded = max(self.mps.max_step_discarded, discarded)
        if self.mps.saturated and discarded > self.opts.trunc_threshold and not self._warned:
            self._warned = True
            warnings.warn(
                f"bond dimension saturated at d_max={self.opts.d_max} "
                f"with discarded weight {discarded:.2e} per step",
                SaturationWarning,
                stacklevel=2,
            )


def tdvp2_step(mps: MPSState, mpo: MPO, opts: TdvpOptions) -> MPSState:
    """One second-order two-site TDVP step on a copy of ``mps``."""
    engine = Tdvp2(mps.copy(), mpo, opts)
    engine.step()
    return engine.mps


def _warn_if_long(params: ModelParams, opts: TdvpOptions) -> None:
    if params.n_modes >= 100 or opts.t_final >= 100:
        warnings.warn(
            f"N={params.n_modes}, t_final={opts.t_final}: this run is long "
            "(hours on a single core)",
            LongRunWarning,
            stacklevel=3,
        )


def observation_times(opts: TdvpOptions, observe_every: int) -> np.ndarray:
    n_obs = opts.n_steps // observe_every
    return np.arange(n_obs + 1) * (opts.dt * observe_every)


def evolve(
    state0,
    params: ModelParams,
    opts: TdvpOptions,
    observe_every: int = 1,
) -> list[tuple[float, np.ndarray]]:
    """Evolve ``state0`` times the bath vacuum and sample reduced density matrices.

    Returns ``floor(t_final / (dt * observe_every)) + 1`` pairs ``(t, rho)``
    with ``rho`` in the Bell basis.
    """
    if observe_every < 1:
        raise ValueError("observe_every must be >= 1")
    _warn_if_long(params, opts)
    engine = Tdvp2(init_product_state(state0, params), build_mpo(params), opts)
    times = observation_times(opts, observe_every)
    out = [(0.0, reduced_two_qubit_dm(engine.mps))]
    for k in range(1, len(times)):
        for _ in range(observe_every):
            engine.step()
        out.append((float(times[k]), reduced_two_qubit_dm(engine.mps)))
    return out


@dataclass
class DynamicalMap:
    """Reduced dynamics of the four Bell basis states and their cross terms.

    ``blocks[t, k, l]`` is ``Tr_bath |Phi_k(t)><Phi_l(t)|`` (Bell basis), where
    ``Phi_k`` evolves Bell state ``k`` times the bath vacuum. Since the exact
    evolution is linear, the reduced state of any initial superposition follows
    without evolving it separately.
    """

    times: np.ndarray
    blocks: np.ndarray
    metadata: dict

    def apply(self, state0) -> np.ndarray:
        d = np.asarray(state0, dtype=complex)
        rho = np.einsum("k,l,tklij->tij", d, d.conj(), self.blocks)
        trace = np.einsum("tii->t", rho).real
        return rho / trace[:, None, None]

    def save(self, path: str | Path) -> None:
        np.savez(
            path, times=self.times, blocks=self.blocks, metadata=json.dumps(self.metadata)
        )

    @classmethod
    def load(cls, path: str | Path) -> DynamicalMap:
        with np.load(path) as data:
            return cls(data["times"], data["blocks"], json.loads(str(data["metadata"])))


def evolve_map(
    params: ModelParams, opts: TdvpOptions, observe_every: int = 1
) -> DynamicalMap:
    """Evolve the four Bell states in lockstep and record all cross terms."""
    if observe_every < 1:
        raise ValueError("observe_every must be >= 1")
    _warn_if_long(params, opts)
    mpo = build_mpo(params)
    engines = [
        Tdvp2(init_product_state(np.eye(4)[k], params), mpo, opts) for k in range(4)
    ]
    times = observation_times(opts, observe_every)
    blocks = np.zeros((len(times), 4, 4, 4, 4), dtype=complex)

    def record(idx: int) -> None:
        for k in range(4):
            for l in range(k, 4):
                m = computational_to_bell(reduced_cross(engines[k].mps, engines[l].mps))
                blocks[idx, k, l] = m
                if l != k:
                    blocks[idx, l, k] = m.conj().T

    record(0)
    for idx in range(1, len(times)):
        for _ in range(observe_every):
            for engine in engines:
                engine.step()
        record(idx)
        if idx % max(1, len(times) // 10) == 0:
            log.info(
                "t=%.2f bond dims %s", times[idx], [max(e.mps.bond_dims) for e in engines]
            )
    metadata = {
        "site_order": ["qubit1", "qubit2"]
        + [f"mode{i + 1}" for i in range(params.n_modes)],
        "mpo_bond_dim": mpo.bond_dim,
        "max_bond_dims": [max(e.mps.bond_dims) for e in engines],
        "trunc_log": [e.mps.trunc_log for e in engines],
        "max_norm_drift": [max(e.mps.norm_drift, default=0.0) for e in engines],
        "saturated": [e.mps.saturated for e in engines],
    }
    return DynamicalMap(times, blocks, metadata)


def map_cache_key(params: ModelParams, opts: TdvpOptions, observe_every: int) -> str:
    """Hash of the inputs and of the code that produces a :class:`DynamicalMap`."""
    h = hashlib.sha256()
    h.update(json.dumps(dataclasses.asdict(params), sort_keys=True).encode())
    h.update(json.dumps(dataclasses.asdict(opts), sort_keys=True).encode())
    h.update(str(observe_every).encode())
    here = Path(__file__).parent
    for name in ("model.py", "mps.py", "tdvp.py"):
        h.update((here / name).read_bytes())
    return h.hexdigest()[:16]


def cached_evolve_map(
    params: ModelParams,
    opts: TdvpOptions,
    observe_every: int = 1,
    cache_dir: str | Path | None = None,
) -> DynamicalMap:
    """:func:`evolve_map`, reusing a previous result from ``cache_dir`` if present.

    The cache key covers the parameters and the source of the modules that
    compute the map, so edits to the integrator invalidate old entries.
    """
    if cache_dir is None:
        return evolve_map(params, opts, observe_every)
    path = Path(cache_dir) / f"map_{map_cache_key(params, opts, observe_every)}.npz"
    if path.exists():
        log.info("loading cached map %s", path)
        return DynamicalMap.load(path)
    result = evolve_map(params, opts, observe_every)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    result.save(tmp)
    tmp.replace(path)
    return result


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho_a - rho_b))))

