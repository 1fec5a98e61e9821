"""Euler-Maruyama benchmark oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from aew.benchmark import em_price, em_terminal_states, price_strikes_from_states
from aew.models import PayoffSpec, VectorFieldSet, build_local_vol, build_sabr
from aew.pricer import black_scholes_call

from conftest import SABR_X0

ATM = PayoffSpec("call", 100.0)
X0 = np.array([100.0])


def test_geometric_brownian_motion_matches_black_scholes():
    # beta = 1 makes the model an exact geometric Brownian motion.
    gbm = build_local_vol(100.0, 1.0, 0.4)
    est = em_price(gbm, X0, ATM, 1.0, 200, 200_000, 7)
    target = black_scholes_call(100.0, 0.4, 1.0, 100.0)
    assert abs(est.value - target) < 3.0 * est.std_err


def test_zero_volatility_degenerates_to_the_payoff():
    degen = build_local_vol(100.0, 0.5, 1e-12)
    est = em_price(degen, X0, PayoffSpec("call", 80.0), 1.0, 10, 1000, 3)
    assert est.value == pytest.approx(20.0, abs=1e-6)


def test_sabr_without_vol_of_vol_is_black_scholes():
    flat = build_sabr(100.0, 0.3, 1e-8, -0.5)
    est = em_price(flat, SABR_X0, PayoffSpec("call", 100.0, "exp_first"), 1.0, 200, 200_000, 5)
    target = black_scholes_call(100.0, 0.3, 1.0, 100.0)
    assert abs(est.value - target) < 3.0 * est.std_err


def test_sabr_terminal_states_shape_and_positive_vol(sabr_model):
    states = em_terminal_states(sabr_model, SABR_X0, 1.0, 50, 5000, 2)
    assert states.shape == (5000, 2)
    assert np.all(np.isfinite(states))
    assert np.all(states[:, 1] > 0)


def test_step_doubling_is_within_noise(lv_model):
    a = em_price(lv_model, X0, ATM, 1.0, 100, 200_000, 7)
    b = em_price(lv_model, X0, ATM, 1.0, 200, 200_000, 7)
    assert abs(a.value - b.value) < 3.0 * math.hypot(a.std_err, b.std_err)


def test_standard_error_path_scaling(lv_model):
    small = em_price(lv_model, X0, ATM, 1.0, 50, 20_000, 9).std_err
    large = em_price(lv_model, X0, ATM, 1.0, 50, 200_000, 9).std_err
    assert small / large == pytest.approx(math.sqrt(10.0), rel=0.2)


def test_determinism_across_reruns(lv_model):
    a = em_terminal_states(lv_model, X0, 1.0, 20, 5000, 3)
    b = em_terminal_states(lv_model, X0, 1.0, 20, 5000, 3)
    np.testing.assert_array_equal(a, b)


def test_strike_table_is_consistent_with_direct_pricing(lv_model):
    states = em_terminal_states(lv_model, X0, 1.0, 50, 50_000, 21)
    table = price_strikes_from_states(states, "call", [90.0, 100.0])
    direct = em_price(lv_model, X0, PayoffSpec("call", 90.0), 1.0, 50, 50_000, 21)
    assert table[90.0][0] == direct.value
    assert table[90.0][1] == direct.std_err
    assert table[100.0][0] < table[90.0][0]


def test_exploding_state_is_reported():
    runaway = VectorFieldSet(
        state_dim=1, noise_dim=1,
        drift=lambda eps, x: np.full(1, np.inf),
        drift_eps_deriv_at_zero=lambda x: np.zeros(1),
        diffusion=[lambda x: np.ones(1)],
        diffusion_jacobian=[lambda x: np.zeros((1, 1))],
        kind="generic",
    )
    with pytest.raises(ArithmeticError):
        em_price(runaway, np.array([1.0]), PayoffSpec("identity"), 1.0, 5, 1000, 1, epsilon=1.0)


def test_size_validation(lv_model):
    with pytest.raises(ValueError):
        em_price(lv_model, X0, ATM, 1.0, 0, 10_000, 1)
    with pytest.raises(ValueError):
        em_price(lv_model, X0, ATM, 1.0, 10, 500, 1)
    generic = VectorFieldSet(
        state_dim=1, noise_dim=1,
        drift=lambda eps, x: np.zeros(1),
        drift_eps_deriv_at_zero=lambda x: np.zeros(1),
        diffusion=[lambda x: np.ones(1)],
        diffusion_jacobian=[lambda x: np.zeros((1, 1))],
        kind="generic",
    )
    with pytest.raises(ValueError):
        em_price(generic, np.array([1.0]), PayoffSpec("identity"), 1.0, 5, 1000, 1)
