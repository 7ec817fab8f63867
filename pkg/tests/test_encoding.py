from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfsqubit.encoding import (
    BUILTIN_STRATEGIES,
    describe,
    encoded_dm,
    encoded_paulis,
    from_amplitudes,
    logical_coordinates,
    logical_initial_state,
    parse_strategy,
    physical_qubit_dm,
    projector,
    strategy,
)
from dfsqubit.metrics import purity
from dfsqubit.model import bell_state

from conftest import random_density_matrix

ALL = [strategy(n) for n in BUILTIN_STRATEGIES] + [
    strategy("OPTSYMM", math.sqrt(3) / 2, 0.5),
    strategy("OPTNSYMM", 0.3),
]


@pytest.mark.parametrize("s", ALL, ids=lambda s: s.name)
def test_logical_states_are_orthonormal(s):
    assert np.vdot(s.up, s.up).real == pytest.approx(1.0, abs=1e-12)
    assert np.vdot(s.down, s.down).real == pytest.approx(1.0, abs=1e-12)
    assert abs(np.vdot(s.up, s.down)) < 1e-12


@pytest.mark.parametrize("s", ALL, ids=lambda s: s.name)
def test_pauli_algebra_on_the_logical_subspace(s):
    sx, sy, sz = encoded_paulis(s)
    proj = projector(s)
    np.testing.assert_allclose(sx @ sx, proj, atol=1e-12)
    np.testing.assert_allclose(sx @ sy - sy @ sx, 2j * sz, atol=1e-12)
    np.testing.assert_allclose(proj @ proj, proj, atol=1e-12)
    assert np.trace(proj).real == pytest.approx(2.0)


def test_known_strategy_vectors():
    symm = strategy("SYMM")
    np.testing.assert_allclose(symm.up, [math.sqrt(3) / 2, 0.5, 0, 0])
    nsymm = strategy("NSYMM")
    np.testing.assert_allclose(nsymm.down, [0] + [1 / math.sqrt(3)] * 3)
    np.testing.assert_allclose(projector(strategy("AF")), np.diag([1, 1, 0, 0]))
    _, _, sz = encoded_paulis(strategy("AF"))
    np.testing.assert_allclose(sz, np.diag([1, -1, 0, 0]))


def test_optnsymm_at_one_over_sqrt3_is_nsymm():
    opt = strategy("OPTNSYMM", 1 / math.sqrt(3))
    np.testing.assert_allclose(opt.down, strategy("NSYMM").down, atol=1e-15)
    np.testing.assert_allclose(opt.up, strategy("NSYMM").up)


def test_optsymm_at_symm_amplitudes_is_symm():
    opt = strategy("OPTSYMM", math.sqrt(3) / 2, 0.5)
    symm = strategy("SYMM")
    np.testing.assert_allclose(opt.up, symm.up, atol=1e-15)
    np.testing.assert_allclose(opt.down, symm.down, atol=1e-15)


def test_invalid_strategies():
    with pytest.raises(ValueError):
        strategy("OPTNSYMM", 0.8)
    with pytest.raises(ValueError):
        strategy("OPTSYMM", 1.2, 0.5)
    with pytest.raises(ValueError):
        strategy("BOGUS")
    with pytest.raises(ValueError):
        from_amplitudes("X", bell_state("S"), bell_state("S"))
    with pytest.raises(ValueError):
        encoded_paulis(strategy("PHYSICAL"))


def test_parse_strategy_labels():
    s = parse_strategy("OPTSYMM(0.8660254037844386, 0.5)")
    assert s.name == "OPTSYMM(0.866025,0.5)"
    assert parse_strategy("af").name == "AF"
    assert "up=" in describe(s)


def test_encoded_dm_examples():
    s = strategy("SYMM")
    up = np.outer(s.up, s.up.conj())
    np.testing.assert_allclose(encoded_dm(up, s).matrix, np.diag([1, 0]), atol=1e-12)
    np.testing.assert_allclose(encoded_dm(np.eye(4) / 4, s).matrix, np.eye(2) / 2, atol=1e-12)
    half = encoded_dm(projector(s) / 2, s)
    np.testing.assert_allclose(half.matrix, np.eye(2) / 2, atol=1e-12)
    assert purity(half.matrix) == pytest.approx(0.5)


@given(st.floats(0, 1))
def test_encoded_dm_is_linear(weight):
    rng = np.random.default_rng(3)
    s = strategy("NSYMM")
    r1, r2 = random_density_matrix(rng), random_density_matrix(rng)
    mixed = encoded_dm(weight * r1 + (1 - weight) * r2, s).matrix
    combo = weight * encoded_dm(r1, s).matrix + (1 - weight) * encoded_dm(r2, s).matrix
    np.testing.assert_allclose(mixed, combo, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_encoded_state_is_always_physical(seed):
    rng = np.random.default_rng(seed)
    for s in ALL:
        enc = encoded_dm(random_density_matrix(rng, rank=int(rng.integers(1, 5))), s)
        assert enc.physicality >= -1e-12
        assert np.linalg.norm(enc.bloch) <= 1 + 1e-10


@given(st.floats(0, math.pi / 2), st.floats(0, 2 * math.pi))
def test_logical_initial_state(theta, phi):
    for s in ALL:
        psi = logical_initial_state(s, theta, phi)
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
        coords = logical_coordinates(psi, s)
        np.testing.assert_allclose(coords, [math.cos(theta), np.exp(1j * phi) * math.sin(theta)], atol=1e-12)


def test_logical_initial_state_examples():
    af = strategy("AF")
    np.testing.assert_allclose(logical_initial_state(af, 0, 0), bell_state("S"))
    np.testing.assert_allclose(logical_initial_state(af, math.pi / 4, 0), [math.sqrt(0.5)] * 2 + [0, 0], atol=1e-15)


def test_physical_qubit_of_bell_states_is_maximally_mixed():
    for label in ("S", "TAF", "TF+", "TF-"):
        psi = bell_state(label)
        np.testing.assert_allclose(physical_qubit_dm(np.outer(psi, psi)), np.eye(2) / 2, atol=1e-15)
