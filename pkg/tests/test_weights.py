"""Hermite tools, closed-form correction weights, and their Monte Carlo oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from aew.gaussian_proxy import proxy_law
from aew.models import PayoffSpec, build_local_vol, build_sabr
from aew.pricer import bachelier_call, q_step_sabr, split_quadrature
from aew.weights import (
    cond_exp_iter2,
    cond_exp_iter3,
    hermite,
    negative_kernel_range,
    weight_fn_local_vol,
    weight_fn_sabr,
    weight_local_vol,
    weight_oracle_mc,
    weight_sabr,
)

from conftest import LV, SABR, SABR_X0


def test_hermite_base_cases_and_examples():
    assert hermite(0, 3.3, 2.0) == 1.0
    assert hermite(1, 3.3, 2.0) == 3.3
    assert hermite(2, 2.0, 1.0) == 3.0
    assert hermite(3, 1.0, 1.0) == -2.0
    assert hermite(4, 0.0, 1.0) == 3.0


def test_hermite_recurrence_at_random_points():
    rng = np.random.default_rng(0)
    xi = rng.normal(size=9) * 2.0
    for v in (0.3, 1.0, 2.5):
        for l in (1, 2, 3):
            lhs = hermite(l + 1, xi, v)
            rhs = xi * hermite(l, xi, v) - l * v * hermite(l - 1, xi, v)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_hermite_orthogonality_by_quadrature():
    # E[h_k(xi; v) h_l(xi; v)] over N(0, v) is k! v^k on the diagonal, else 0.
    v = 1.7
    nodes, wts = np.polynomial.hermite_e.hermegauss(64)
    xi = nodes * math.sqrt(v)
    ww = wts / math.sqrt(2.0 * math.pi)
    for k in range(5):
        for l in range(5):
            val = float(np.sum(hermite(k, xi, v) * hermite(l, xi, v) * ww))
            target = math.factorial(k) * v**k if k == l else 0.0
            assert abs(val - target) < 1e-10


def test_hermite_validation():
    with pytest.raises(ValueError):
        hermite(5, 0.0, 1.0)
    with pytest.raises(ValueError):
        hermite(2, 0.0, 0.0)


def test_cond_exp_iterated_integral_examples():
    # Constant unit integrands on [0,1]: nested overlap 1/2, variance 1.
    assert cond_exp_iter2(1.0, 1.0, 1.0, 1.0) == 0.0
    assert cond_exp_iter2(1.0, 1.0, 2.0, 1.0) == 1.5
    assert cond_exp_iter2(1.0, 1.0, 0.0, 1.0) == -0.5
    assert cond_exp_iter3(1.0 / 6.0, 2.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert cond_exp_iter3(1.0 / 6.0, 0.0, 1.0) == 0.0
    assert cond_exp_iter3(1.0 / 6.0, 1.0, 1.0) == pytest.approx(-1.0 / 3.0, rel=1e-15)
    with pytest.raises(ValueError):
        cond_exp_iter2(1.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        cond_exp_iter3(1.0, 0.0, -1.0)


def test_local_vol_weight_examples():
    assert float(weight_local_vol(0, LV, 1.0, 100.0, 123.0)) == 1.0
    # 1 + eps*sigma'(100)*h3(1;1)/2 = 1 + 0.4*0.5*(-2)/2 = 0.8.
    assert float(weight_local_vol(1, LV, 1.0, 100.0, 140.0)) == pytest.approx(0.8, abs=1e-14)
    assert float(weight_local_vol(1, LV, 1.0, 100.0, 100.0)) == 1.0


def test_local_vol_weight_validation_and_broadcast():
    with pytest.raises(ValueError):
        weight_local_vol(3, LV, 1.0, 100.0, 100.0)
    with pytest.raises(ValueError):
        weight_local_vol(1, LV, 0.0, 100.0, 100.0)
    y = np.linspace(60.0, 140.0, 11)
    assert weight_local_vol(2, LV, 0.5, 100.0, y).shape == (11,)


def test_weight_normalization_by_quadrature(lv_model):
    # The weighted proxy density integrates to one: corrections have zero mean.
    for m in (1, 2):
        w = weight_fn_local_vol(LV, m)
        for t in (0.25, 1.0):
            std = LV.epsilon * 100.0 * math.sqrt(t)
            val = split_quadrature(100.0, std, 0.0,
                                   lambda y: w.eval(t, np.array([100.0]), y), 128)
            assert abs(float(val) - 1.0) < 1e-8


def test_weighted_first_moment_matches_benchmark_mean(lv_model, lv_bench_states):
    # E[y * M^1] recovers the true martingale mean within benchmark noise.
    w = weight_fn_local_vol(LV, 1)
    std = LV.epsilon * 100.0
    first = split_quadrature(100.0, std, 0.0,
                             lambda y: y * w.eval(1.0, np.array([100.0]), y), 128)
    em_mean = float(lv_bench_states.mean())
    em_se = float(lv_bench_states.std(ddof=1) / math.sqrt(lv_bench_states.size))
    assert abs(float(first) - em_mean) < 3.0 * em_se


def test_second_order_correction_is_order_eps_squared():
    # sup |M^2 - M^1| over mean +/- 6 total standard deviations, frozen bound.
    def sup_diff(params):
        std = params.epsilon * 100.0
        y = np.linspace(100.0 - 6.0 * std, 100.0 + 6.0 * std, 4001)
        d = weight_local_vol(2, params, 1.0, 100.0, y) - weight_local_vol(1, params, 1.0, 100.0, y)
        return float(np.max(np.abs(d)))

    from aew.models import LocalVolCev
    c = sup_diff(LV) / LV.epsilon**2
    assert c < 1040.0
    # Exact quadratic scaling: the standardized grid is epsilon-invariant.
    half = LocalVolCev(100.0, 0.5, 0.2)
    assert sup_diff(LV) / sup_diff(half) == pytest.approx(4.0, rel=1e-12)


def test_negative_kernel_range_diagnostic():
    w0 = weight_fn_local_vol(LV, 0)
    assert negative_kernel_range(w0, 1.0, np.array([100.0]), 100.0, 40.0) is None
    w1 = weight_fn_local_vol(LV, 1)
    rng = negative_kernel_range(w1, 1.0, np.array([100.0]), 100.0, 40.0)
    assert rng is not None
    lo, hi = rng
    assert lo < hi < 100.0
    mid = 0.5 * (lo + hi)
    assert float(w1.eval(1.0, np.array([100.0]), np.array([mid]))[0]) < 0.0


def test_sabr_weight_values_at_the_proxy_mean(sabr_model):
    for t in (0.25, 0.5, 1.0):
        law = proxy_law(sabr_model, SABR_X0, t, SABR.nu)
        mean = law.skeleton + law.epsilon * law.mu
        w2 = float(weight_sabr("TwoDim", SABR, t, SABR_X0, mean[None, :])[0])
        assert w2 == pytest.approx(1.0, abs=1e-12)
        wm = float(weight_sabr("Marginal", SABR, t, SABR_X0, np.array([mean[0]]))[0])
        # 1 + eps*rho*sigma*t/2: only the h2 term survives at the mean.
        assert wm == pytest.approx(1.0 + SABR.nu * SABR.rho * SABR.sigma0 * t / 2.0, abs=1e-14)


def test_sabr_marginal_is_the_conditioned_twodim_weight(sabr_model):
    # Integrating the two-dimensional weight over the conditional law of the
    # second coordinate reproduces the marginal weight pointwise.
    t = 1.0
    law = proxy_law(sabr_model, SABR_X0, t, SABR.nu)
    mean = law.skeleton + law.epsilon * law.mu
    cov = law.epsilon**2 * law.sigma
    nodes, wts = np.polynomial.hermite_e.hermegauss(64)
    wm = weight_fn_sabr(SABR, "Marginal")
    w2 = weight_fn_sabr(SABR, "TwoDim")
    for shift in (-2.0, -0.7, 0.0, 0.9, 2.4):
        y1 = float(mean[0] + shift * math.sqrt(cov[0, 0]))
        mu_c = mean[1] + cov[0, 1] / cov[0, 0] * (y1 - mean[0])
        var_c = cov[1, 1] - cov[0, 1] ** 2 / cov[0, 0]
        y2 = mu_c + nodes * math.sqrt(var_c)
        pts = np.stack([np.full_like(y2, y1), y2], axis=-1)
        val = float(np.sum(w2.eval(t, SABR_X0, pts) * wts)) / math.sqrt(2.0 * math.pi)
        target = float(wm.eval(t, SABR_X0, np.array([y1]))[0])
        assert abs(val - target) < 1e-8


def test_sabr_weight_normalization(sabr_model):
    # Marginal: 1-d quadrature over the log-spot marginal law.
    wm = weight_fn_sabr(SABR, "Marginal")
    for t in (0.25, 1.0):
        law = proxy_law(sabr_model, SABR_X0, t, SABR.nu)
        mean = float(law.skeleton[0] + law.epsilon * law.mu[0])
        std = float(law.epsilon * math.sqrt(law.sigma[0, 0]))
        val = split_quadrature(mean, std, 0.0, lambda y: wm.eval(t, SABR_X0, y), 128)
        assert abs(float(val) - 1.0) < 1e-8


def test_weight_fn_metadata():
    assert weight_fn_local_vol(LV, 2).model_tag == "LocalVolM2"
    assert weight_fn_local_vol(LV, 2).order == 2
    assert weight_fn_sabr(SABR, "TwoDim").model_tag == "SabrM1TwoDim"
    assert weight_fn_sabr(SABR, "Marginal").model_tag == "SabrM1Marginal"
    with pytest.raises(ValueError):
        weight_fn_sabr(SABR, "Joint")
    with pytest.raises(ValueError):
        weight_sabr("Diagonal", SABR, 1.0, SABR_X0, np.zeros(1))


def test_oracle_order_zero_matches_bachelier(lv_model):
    est = weight_oracle_mc(lv_model, 0, 1.0, np.array([100.0]),
                           PayoffSpec("call", 100.0), 10**5, 67)
    target = bachelier_call(100.0, 40.0, 100.0)
    assert abs(est.value - target) < 3.0 * est.std_err


def test_oracle_identity_payoff_keeps_the_proxy_mean(lv_model):
    # The first-order correction is an Ito integral with zero mean.
    est = weight_oracle_mc(lv_model, 1, 1.0, np.array([100.0]),
                           PayoffSpec("identity"), 10**5, 67)
    assert abs(est.value - 100.0) < 3.0 * est.std_err


def test_oracle_sabr_matches_marginal_quadrature(sabr_model):
    est = weight_oracle_mc(sabr_model, 1, 1.0, SABR_X0,
                           PayoffSpec("call", 100.0, "exp_first"), 10**5, 67)
    target = q_step_sabr(SABR, SABR_X0, 1.0, PayoffSpec("call", 100.0, "exp_first")).value
    assert abs(est.value - target) < 3.0 * est.std_err


def test_oracle_validation(lv_model, sabr_model):
    with pytest.raises(ValueError):
        weight_oracle_mc(lv_model, 3, 1.0, np.array([100.0]), PayoffSpec("call", 100.0), 1000, 1)
    with pytest.raises(ValueError):
        weight_oracle_mc(lv_model, 1, 0.0, np.array([100.0]), PayoffSpec("call", 100.0), 1000, 1)
    with pytest.raises(ValueError):
        weight_oracle_mc(sabr_model, 2, 1.0, SABR_X0,
                         PayoffSpec("call", 100.0, "exp_first"), 1000, 1)
    from aew.models import VectorFieldSet
    generic = VectorFieldSet(
        state_dim=1, noise_dim=1,
        drift=lambda eps, x: np.zeros(1),
        drift_eps_deriv_at_zero=lambda x: np.zeros(1),
        diffusion=[lambda x: np.ones(1)],
        diffusion_jacobian=[lambda x: np.zeros((1, 1))],
        kind="generic",
    )
    with pytest.raises(ValueError):
        weight_oracle_mc(generic, 1, 1.0, np.array([1.0]), PayoffSpec("identity"), 1000, 1)
