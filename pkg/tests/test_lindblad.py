from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfsqubit.closed_evolution import propagate_closed
from dfsqubit.lindblad import (
    TRACKED_ELEMENTS,
    StepSizeWarning,
    UnspecifiedCoherenceWarning,
    analytic_bell_fidelity,
    analytic_density,
    decay_constant,
    decay_rate,
    rk4_lindblad,
    to_interaction,
    to_schrodinger,
)
from dfsqubit.metrics import purity
from dfsqubit.model import ModelParams, bell_mixing_coeffs, bell_state, bell_to_energy, energy_to_bell

# gamma = 2 pi alpha c at alpha = 0.02, from 30-digit arithmetic
GAMMA_NU_M5 = 0.046670328817831873
GAMMA_NU_0 = 0.12566370614359173


def tracked_state() -> np.ndarray:
    """Energy-basis state with every tracked element nonzero and no untracked coherence."""
    psi = np.array([0.3, 0.5j, 0.0, np.exp(0.25j * math.pi) * math.sqrt(1 - 0.34 - 0.2)])
    rho = 0.8 * np.outer(psi, psi.conj()) / np.vdot(psi, psi).real
    rho[2, 2] = 0.2
    return rho


@pytest.mark.parametrize("nu, gamma", [(-5.0, GAMMA_NU_M5), (5.0, GAMMA_NU_M5), (0.0, GAMMA_NU_0)])
def test_decay_rate_frozen(nu, gamma):
    assert decay_rate(ModelParams(nu=nu, alpha=0.02)).gamma == pytest.approx(gamma, rel=1e-13)


@given(st.floats(-10, 10))
def test_two_forms_of_the_decay_constant_agree(nu):
    c, c_alt = decay_constant(ModelParams(nu=nu))
    assert c == pytest.approx(c_alt, abs=1e-10)


def test_cutoff_rates_approach_the_single_rate_for_large_cutoff():
    rates = decay_rate(ModelParams(nu=-5.0, alpha=0.02, omega_c=1e6))
    assert rates.gamma_01 == pytest.approx(rates.gamma, rel=1e-5)
    assert rates.gamma_13 == pytest.approx(rates.gamma, rel=1e-5)


def test_rk4_matches_closed_forms():
    params = ModelParams(nu=-5.0, alpha=0.02)
    gamma = decay_rate(params).gamma
    dt = 0.05
    t_final = 5.0 / gamma
    t_final = dt * math.ceil(t_final / dt)
    rho0 = tracked_state()
    traj = rk4_lindblad(rho0, params, dt, t_final)
    worst = 0.0
    for k in range(0, len(traj), 10):
        exact = analytic_density(rho0, gamma, k * dt)
        worst = max(worst, max(abs(traj[k][i, j] - exact[i, j]) for i, j in TRACKED_ELEMENTS))
    assert worst < 1e-6


def test_closed_form_preserves_trace_and_positivity():
    rho0 = tracked_state()
    for t in (0.0, 1.0, 30.0, 300.0):
        rho = analytic_density(rho0, 0.05, t)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_closed_form_ground_state_is_fixed():
    ground = np.diag([1.0, 0, 0, 0]).astype(complex)
    np.testing.assert_allclose(analytic_density(ground, 0.1, 50.0), ground, atol=1e-15)


def test_purity_non_increasing_for_diagonal_start():
    rho0 = np.diag([0.0, 0.0, 0.0, 1.0]).astype(complex)
    values = [purity(analytic_density(rho0, 0.05, t)) for t in np.linspace(0, 20, 41)]
    # |3> -> |1> -> |0> cascade: purity dips then recovers to 1, so only the
    # early segment before the minimum is monotone
    k = int(np.argmin(values))
    assert all(b <= a + 1e-12 for a, b in zip(values[:k], values[1:k + 1]))


def test_unspecified_coherences_are_rejected_or_passed_through():
    rho0 = np.full((4, 4), 0.25, dtype=complex)
    with pytest.raises(ValueError):
        analytic_density(rho0, 0.1, 1.0)
    with pytest.warns(UnspecifiedCoherenceWarning):
        rho = analytic_density(rho0, 0.1, 1.0, allow_unspecified_coherences=True)
    assert rho[0, 2] == rho0[0, 2]


def test_picture_helpers_are_inverse():
    params = ModelParams(nu=1.5)
    rho = tracked_state()
    np.testing.assert_allclose(to_interaction(to_schrodinger(rho, params, 2.3), params, 2.3), rho, atol=1e-14)


def test_schrodinger_rk4_agrees_with_rotated_interaction_rk4():
    params = ModelParams(nu=-5.0, alpha=0.02)
    rho0 = tracked_state()
    inter = rk4_lindblad(rho0, params, 0.01, 2.0)
    schro = rk4_lindblad(rho0, params, 0.01, 2.0, picture="schrodinger")
    # free phases make the Schrodinger run stiffer: RK4 phase error ~ t (E dt)^4 E / 120
    np.testing.assert_allclose(schro[-1], to_schrodinger(inter[-1], params, 2.0), atol=1e-6)


def test_rk4_validates_step():
    params = ModelParams(alpha=0.02)
    with pytest.raises(ValueError):
        rk4_lindblad(tracked_state(), params, 0.3, 1.0)
    with pytest.raises(ValueError):
        rk4_lindblad(tracked_state(), params, 0.1, 1.0, picture="heisenberg")
    with pytest.warns(StepSizeWarning):
        rk4_lindblad(tracked_state(), params.replace(alpha=1.0), 1.0, 2.0)


def test_tf_minus_fidelity_is_exponential():
    params = ModelParams(nu=-5.0, alpha=0.02)
    gamma = decay_rate(params).gamma
    for t in np.linspace(0, 40, 9):
        assert analytic_bell_fidelity("TF-", params, t) == math.exp(-gamma * t / 2)
        assert gamma == pytest.approx(GAMMA_NU_M5, rel=1e-13)


def test_taf_fidelity_tends_to_abs_a():
    params = ModelParams(nu=-5.0, alpha=0.02)
    assert analytic_bell_fidelity("TAF", params, 2000.0) == pytest.approx(0.98195638673142182, abs=1e-12)


def test_tf_plus_and_taf_coincide_without_interaction():
    params = ModelParams(nu=0.0, alpha=0.02)
    for t in np.linspace(0, 50, 26):
        assert analytic_bell_fidelity("TF+", params, t) == pytest.approx(
            analytic_bell_fidelity("TAF", params, t), abs=1e-12
        )


def test_singlet_fidelity_is_one():
    assert analytic_bell_fidelity("S", ModelParams(), 10.0) == 1.0


@pytest.mark.parametrize("label", ["TF+", "TAF", "TF-"])
@pytest.mark.parametrize("nu", [-5.0, 5.0, 0.7])
def test_bell_fidelity_formulas_match_direct_evaluation(label, nu):
    """Default formula: closed state (Schrodinger) against open state (interaction picture).

    ``same_picture=True``: both in the Schrodinger picture.
    """
    params = ModelParams(nu=nu, alpha=0.02)
    gamma = decay_rate(params).gamma
    psi = bell_state(label)
    rho0 = bell_to_energy(np.outer(psi, psi.conj()), params)
    for t in (0.0, 3.3, 17.0, 60.0):
        inter = analytic_density(rho0, gamma, t)
        closed = propagate_closed(psi, params, t)
        mixed = energy_to_bell(inter, params)
        same = energy_to_bell(to_schrodinger(inter, params, t), params)
        f_mixed = math.sqrt(np.vdot(closed, mixed @ closed).real)
        f_same = math.sqrt(np.vdot(closed, same @ closed).real)
        assert analytic_bell_fidelity(label, params, t) == pytest.approx(f_mixed, abs=1e-12)
        assert analytic_bell_fidelity(label, params, t, same_picture=True) == pytest.approx(f_same, abs=1e-12)


def test_mixing_coefficients_give_stationary_value():
    a, _ = bell_mixing_coeffs(ModelParams(nu=-5.0))
    assert abs(a) == pytest.approx(0.98195638673142182, abs=1e-15)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        analytic_bell_fidelity("TAF", ModelParams(), -1.0)
