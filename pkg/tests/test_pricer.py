"""One-step operator quadrature and the closed-form reference prices."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from aew.gaussian_proxy import ProxyLaw, proxy_law
from aew.models import PayoffSpec
from aew.pricer import (
    bachelier_call,
    bachelier_put,
    black_scholes_call,
    kink_location,
    lognormal_call,
    q_step_1d,
    q_step_sabr,
)
from aew.weights import weight_fn_local_vol, weight_fn_sabr

from conftest import LV, SABR, SABR_X0
from reference import BACHELIER_ATM_40

ATM_LAW_PARAMS = dict(mean=100.0, std=40.0)


def _lv_law(lv_model, t=1.0):
    return proxy_law(lv_model, np.array([100.0]), t, LV.epsilon)


def test_bachelier_closed_forms_match_quadrature():
    for mean, std, k in [(100.0, 40.0, 100.0), (95.0, 13.0, 120.0), (10.0, 2.0, 4.0)]:
        # Integrate above the kink only, where the integrand is smooth.
        num, _ = integrate.quad(
            lambda y: (y - k) * stats.norm.pdf(y, mean, std),
            k, mean + 13 * std, limit=200)
        assert bachelier_call(mean, std, k) == pytest.approx(num, abs=1e-10)
        assert bachelier_put(mean, std, k) == pytest.approx(num - (mean - k), abs=1e-10)
    assert bachelier_call(100.0, 40.0, 100.0) == pytest.approx(BACHELIER_ATM_40, abs=1e-12)


def test_lognormal_call_matches_quadrature():
    for mu, s, k in [(math.log(100.0), 0.3, 100.0), (4.2, 0.55, 40.0)]:
        num, _ = integrate.quad(
            lambda y: (math.exp(y) - k) * stats.norm.pdf(y, mu, s),
            math.log(k), mu + 13 * s, limit=200)
        assert lognormal_call(mu, s, k) == pytest.approx(num, rel=1e-10)
    # Zero strike reduces to the forward.
    assert lognormal_call(4.0, 0.5, 0.0) == pytest.approx(math.exp(4.0 + 0.125), rel=1e-14)


def test_black_scholes_call_reference_value():
    # Independent d1/d2 evaluation.
    spot, vol, T, k = 100.0, 0.4, 1.0, 100.0
    d1 = (math.log(spot / k) + vol**2 * T / 2.0) / (vol * math.sqrt(T))
    d2 = d1 - vol * math.sqrt(T)
    target = spot * stats.norm.cdf(d1) - k * stats.norm.cdf(d2)
    assert black_scholes_call(spot, vol, T, k) == pytest.approx(target, rel=1e-12)
    assert black_scholes_call(spot, vol, T, k) == pytest.approx(15.851941887820608, rel=1e-10)


def test_q_step_order_zero_is_bachelier(lv_model):
    law = _lv_law(lv_model)
    w0 = weight_fn_local_vol(LV, 0)
    for k in (60.0, 100.0, 155.0):
        val = q_step_1d(law, w0, PayoffSpec("call", k))
        assert abs(val - bachelier_call(100.0, 40.0, k)) < 1e-10
    assert q_step_1d(law, w0, PayoffSpec("identity")) == pytest.approx(100.0, abs=1e-9)


def test_q_step_atm_identity(lv_model):
    val = q_step_1d(_lv_law(lv_model), weight_fn_local_vol(LV, 0), PayoffSpec("call", 100.0))
    assert abs(val - BACHELIER_ATM_40) < 1e-9


def test_q_step_put_call_parity(lv_model):
    law = _lv_law(lv_model)
    for m in (0, 1, 2):
        w = weight_fn_local_vol(LV, m)
        c = q_step_1d(law, w, PayoffSpec("call", 100.0))
        p = q_step_1d(law, w, PayoffSpec("put", 100.0))
        f = q_step_1d(law, w, PayoffSpec("identity"))
        assert abs((c - p) - (f - 100.0)) < 1e-9


def test_q_step_node_doubling_is_converged(lv_model):
    law = _lv_law(lv_model)
    w = weight_fn_local_vol(LV, 2)
    a = q_step_1d(law, w, PayoffSpec("call", 120.0), nodes=128)
    b = q_step_1d(law, w, PayoffSpec("call", 120.0), nodes=256)
    assert abs(a - b) < 1e-11


def test_q_step_monotone_in_strike(lv_model):
    law = _lv_law(lv_model)
    w0 = weight_fn_local_vol(LV, 0)
    strikes = np.arange(20.0, 420.0, 10.0)
    vals0 = [q_step_1d(law, w0, PayoffSpec("call", k)) for k in strikes]
    assert np.all(np.diff(vals0) <= 1e-12)
    # The signed kernel may break monotonicity only in the far tail; within
    # +/- 3 proxy standard deviations it must hold.
    w1 = weight_fn_local_vol(LV, 1)
    inner = strikes[(strikes >= 100.0 - 3 * 40.0) & (strikes <= 100.0 + 3 * 40.0)]
    vals1 = [q_step_1d(law, w1, PayoffSpec("call", k)) for k in inner]
    assert np.all(np.diff(vals1) <= 1e-12)


def test_q_step_degenerate_law_returns_payoff_of_mean():
    degenerate = ProxyLaw(np.array([100.0]), np.eye(1), np.zeros(1),
                          np.zeros((1, 1)), LV.epsilon, 1.0, np.array([100.0]))
    w = weight_fn_local_vol(LV, 1)
    assert q_step_1d(degenerate, w, PayoffSpec("call", 80.0)) == 20.0
    assert q_step_1d(degenerate, w, PayoffSpec("put", 80.0)) == 0.0


def test_q_step_validation(lv_model, sabr_model):
    law = _lv_law(lv_model)
    with pytest.raises(ValueError):
        q_step_1d(law, weight_fn_local_vol(LV, 0), PayoffSpec("call", 100.0), nodes=8)
    law2 = proxy_law(sabr_model, SABR_X0, 1.0, SABR.nu)
    with pytest.raises(ValueError):
        q_step_1d(law2, weight_fn_sabr(SABR, "TwoDim"), PayoffSpec("call", 100.0, "exp_first"))


def test_kink_location_clipping():
    assert kink_location(PayoffSpec("identity"), 100.0, 40.0) == 0.0
    assert kink_location(PayoffSpec("call", 120.0), 100.0, 40.0) == pytest.approx(0.5)
    assert kink_location(PayoffSpec("call", 10000.0), 100.0, 40.0) == 13.0
    assert kink_location(PayoffSpec("call", 100.0, "exp_first"),
                         math.log(100.0), 0.3) == pytest.approx(0.0, abs=1e-12)


def test_sabr_marginal_quadrature_regression_values():
    pay = PayoffSpec("call", 100.0, "exp_first")
    est = q_step_sabr(SABR, SABR_X0, 1.0, pay)
    assert est.std_err == 0.0
    assert est.value == pytest.approx(11.879159549321507, abs=1e-9)
    est2 = q_step_sabr(SABR, SABR_X0, 1.0, PayoffSpec("call", 140.0, "exp_first"))
    assert est2.value == pytest.approx(2.0790891166067835, abs=1e-9)


def test_sabr_two_dim_mc_agrees_with_marginal():
    pay = PayoffSpec("call", 100.0, "exp_first")
    target = q_step_sabr(SABR, SABR_X0, 1.0, pay).value
    est = q_step_sabr(SABR, SABR_X0, 1.0, pay, mode="TwoDimMc", paths=50_000, stream=9)
    assert est.std_err > 0.0
    assert abs(est.value - target) < 3.0 * est.std_err
    again = q_step_sabr(SABR, SABR_X0, 1.0, pay, mode="TwoDimMc", paths=50_000, stream=9)
    assert again.value == est.value


def test_sabr_small_vol_of_vol_limit_is_black_scholes():
    # eta = 1/nu keeps the spot diffusion at sigma0 as nu -> 0, so the limit
    # is the log-normal price, not the deterministic skeleton payoff.
    from aew.models import LogNormalSabr
    tiny = LogNormalSabr(100.0, 0.3, 1e-8, -0.5)
    x0 = np.array([math.log(100.0), 0.3])
    for k in (80.0, 100.0, 120.0):
        bs = black_scholes_call(100.0, 0.3, 1.0, k)
        mq = q_step_sabr(tiny, x0, 1.0, PayoffSpec("call", k, "exp_first")).value
        assert abs(mq - bs) < 1e-6
    mc = q_step_sabr(tiny, x0, 1.0, PayoffSpec("call", 100.0, "exp_first"),
                     mode="TwoDimMc", paths=20_000, stream=4)
    assert abs(mc.value - black_scholes_call(100.0, 0.3, 1.0, 100.0)) < 3.0 * mc.std_err


def test_sabr_mode_validation():
    pay = PayoffSpec("call", 100.0, "exp_first")
    with pytest.raises(ValueError):
        q_step_sabr(SABR, SABR_X0, 1.0, pay, mode="TwoDimMc", paths=500)
    with pytest.raises(ValueError):
        q_step_sabr(SABR, SABR_X0, 1.0, pay, mode="Exact")
    with pytest.raises(ValueError):
        q_step_sabr(SABR, SABR_X0, 0.0, pay)
