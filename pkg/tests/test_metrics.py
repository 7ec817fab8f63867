from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfsqubit.encoding import projector, strategy
from dfsqubit.metrics import (
    aggregate,
    leakage,
    mean_outer_product,
    purity,
    sampling_faithfulness,
    uhlmann_fidelity,
)
from dfsqubit.model import bell_state

from conftest import random_density_matrix, random_state


def test_fidelity_examples():
    ket0 = np.diag([1.0, 0.0])
    assert uhlmann_fidelity(np.eye(2) / 2, ket0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert uhlmann_fidelity(np.eye(2) / 2, ket0, use_pure_shortcut=False) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    s, taf = bell_state("S"), bell_state("TAF")
    assert uhlmann_fidelity(np.outer(s, s), np.outer(taf, taf)) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_fidelity_properties(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density_matrix(rng), random_density_matrix(rng)
    f_ab = uhlmann_fidelity(a, b, use_pure_shortcut=False)
    assert 0 <= f_ab <= 1 + 1e-9
    assert f_ab == pytest.approx(uhlmann_fidelity(b, a, use_pure_shortcut=False), abs=1e-10)
    assert uhlmann_fidelity(a, a) == pytest.approx(1.0, abs=1e-9)
    psi = random_state(rng)
    pure = np.outer(psi, psi.conj())
    assert uhlmann_fidelity(a, pure) == pytest.approx(uhlmann_fidelity(a, pure, use_pure_shortcut=False), abs=1e-10)


def test_fidelity_rejects_bad_inputs():
    with pytest.raises(ValueError):
        uhlmann_fidelity(np.eye(2) / 2, np.eye(4) / 4)
    with pytest.raises(ValueError):
        uhlmann_fidelity(np.diag([1.1, -0.1]), np.eye(2) / 2)


def test_fidelity_tolerates_roundoff_negativity():
    rho = np.diag([1.0 + 5e-11, -5e-11])
    assert uhlmann_fidelity(rho, np.eye(2) / 2) == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_purity_examples():
    assert purity(np.eye(2) / 2) == pytest.approx(0.5)
    psi = bell_state("TF+")
    assert purity(np.outer(psi, psi)) == pytest.approx(1.0)


def test_leakage_examples():
    af = strategy("AF")
    rho0 = np.outer(af.up, af.up.conj())
    assert leakage(af, rho0, rho0) == 0.0
    assert leakage(af, rho0, np.eye(4) / 4) == pytest.approx(0.5 / (2 * math.sqrt(2)), abs=1e-12)
    outside = np.outer(bell_state("TF+"), bell_state("TF+"))
    assert leakage(af, outside, rho0) < 0


@given(st.integers(0, 2**32 - 1))
def test_leakage_bounds(seed):
    rng = np.random.default_rng(seed)
    s = strategy("NSYMM")
    a, b = random_density_matrix(rng), random_density_matrix(rng)
    value = leakage(s, a, b)
    assert abs(value) <= 1
    inside = projector(s) @ a @ projector(s)
    inside /= np.trace(inside).real
    assert leakage(s, inside, b) <= 1 / (2 * math.sqrt(2)) + 1e-12


def test_sampling_faithfulness_examples():
    assert sampling_faithfulness([bell_state("S")], 4) == pytest.approx(math.sqrt(0.75), abs=1e-12)
    basis = [bell_state(x) for x in ("S", "TAF", "TF+", "TF-")]
    assert sampling_faithfulness(basis) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        sampling_faithfulness(basis, 2)
    with pytest.raises(ValueError):
        mean_outer_product([])


def test_aggregate_examples():
    ts = aggregate("x", [0.0, 1.0], [[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_array_equal(ts.mean, [0.5, 0.5])
    np.testing.assert_array_equal(ts.std, [0.5, 0.5])
    same = aggregate("x", [0.0], [[0.3], [0.3], [0.3]])
    assert same.std[0] == 0.0
    with pytest.raises(ValueError):
        aggregate("x", [0.0, 1.0], [[1.0]])


def test_aggregate_is_permutation_invariant(rng):
    data = rng.normal(size=(83, 50))
    ts = aggregate("x", np.arange(50.0), data)
    perm = aggregate("x", np.arange(50.0), data[rng.permutation(83)])
    assert np.array_equal(ts.mean, perm.mean) and np.array_equal(ts.std, perm.std)
    np.testing.assert_allclose(ts.mean, data.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(ts.std, data.std(axis=0), atol=1e-12)
