"""One-step expansion operator: E[f(X-bar) * M^m(t, x, X-bar)].

One-dimensional laws are integrated by deterministic quadrature with the
payoff kink split at the strike; the two-dimensional SABR step offers either
a marginal-law quadrature (exact tower projection for payoffs of the first
coordinate) or weighted Monte Carlo over the full pair.  Closed-form normal
and log-normal expectations are included as reference oracles.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .estimates import MethodInfo, PriceEstimate
from .gaussian_proxy import ProxyLaw, proxy_law, sample
from .models import LogNormalSabr, PayoffSpec, build_sabr, eval_payoff, map_underlying, payoff_values
from .rng import BLOCK_PATHS, substream
from .weights import WeightFunction, sabr_twodim_weight, weight_fn_sabr

DEFAULT_NODES = 128
# Standardized truncation; the Gaussian mass beyond 13 std is ~1e-38, far
# below the 1e-10 quadrature target.
Z_MAX = 13.0

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@lru_cache(maxsize=None)
def _gl_nodes(n: int):
    xi, wxi = leggauss(n)
    return xi, wxi


def _half_range_nodes(z_lo, z_hi, n: int):
    """Affine Gauss-Legendre rule on [z_lo, z_hi]; arguments may broadcast."""
    xi, wxi = _gl_nodes(n)
    z_lo = np.asarray(z_lo, float)[..., None]
    z_hi = np.asarray(z_hi, float)[..., None]
    half = (z_hi - z_lo) / 2.0
    z = half * xi + (z_lo + z_hi) / 2.0
    return z, half * wxi


def kink_location(payoff: PayoffSpec, mean: float, std: float) -> float:
    """Standardized coordinate of the payoff kink, clipped to the quadrature range."""
    if payoff.kind == "identity":
        return 0.0
    k = payoff.strike
    y_kink = np.log(k) if payoff.underlying_map == "exp_first" else k
    if payoff.underlying_map == "exp_first" and k <= 0:
        return -Z_MAX
    return float(np.clip((y_kink - mean) / std, -Z_MAX, Z_MAX))


def split_quadrature(mean, std, z_split, integrand, nodes: int) -> np.ndarray:
    """Integrate integrand(y) * N(mean, std^2)(dy) splitting at z_split.

    All of mean, std, z_split may broadcast (vectorized anchors); integrand
    receives the y array and must evaluate elementwise.
    """
    total = None
    for z_lo, z_hi in ((-Z_MAX, z_split), (z_split, Z_MAX)):
        z, wts = _half_range_nodes(z_lo, z_hi, nodes)
        y = np.asarray(mean, float)[..., None] + np.asarray(std, float)[..., None] * z
        phi = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
        part = np.sum(wts * phi * integrand(y), axis=-1)
        total = part if total is None else total + part
    return total


def q_step_1d(law: ProxyLaw, w: WeightFunction, payoff: PayoffSpec, nodes: int = DEFAULT_NODES) -> float:
    """One-step weighted price by Gaussian quadrature on a one-dimensional law.

    The integral of f(y) * M^m(t, x, y) against the proxy density is split at
    the payoff kink into two smooth half-range integrals.

    Args:
        law: one-dimensional proxy law (its anchor may carry extra state
            coordinates used by the weight, e.g. the vol anchor).
        w: correction weight.
        payoff: call/put/identity payoff.
        nodes: Gauss-Legendre nodes per half-integral, >= 16.
    """
    if law.sigma.shape != (1, 1):
        raise ValueError("q_step_1d needs a one-dimensional law")
    if nodes < 16:
        raise ValueError("nodes must be >= 16")
    mean = float(law.mean[0])
    std = law.std1()
    if std == 0.0:
        return eval_payoff(payoff, law.mean)
    z_split = kink_location(payoff, mean, std)

    def integrand(y):
        u = map_underlying(payoff, y)
        return payoff_values(payoff, u) * w.eval(law.t, law.anchor, y)

    return float(split_quadrature(mean, std, z_split, integrand, nodes))


def q_step_sabr(
    model: LogNormalSabr,
    x,
    t: float,
    payoff: PayoffSpec,
    mode: str = "MarginalQuadrature",
    paths: int = 0,
    stream: int = 0,
    nodes: int = DEFAULT_NODES,
) -> PriceEstimate:
    """One-step SABR price with the first-order weight.

    Args:
        model: SABR parameters.
        x: anchor state (x1, sigma).
        t: step length, > 0.
        payoff: payoff on the exponentiated log-spot.
        mode: "MarginalQuadrature" (deterministic, conditions on the log-spot
            marginal) or "TwoDimMc" (weighted Monte Carlo over the pair).
        paths: sample count for TwoDimMc, >= 1000.
        stream: master seed for TwoDimMc.
        nodes: quadrature nodes per half-integral.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.atleast_1d(np.asarray(x, float))
    x1, sig = float(x[0]), float(x[1])
    eps, eta = model.epsilon, model.eta

    if mode == "MarginalQuadrature":
        law = ProxyLaw(
            skeleton=np.array([x1]),
            jacobian=np.eye(1),
            mu=np.array([-eta * sig**2 * t / 2.0]),
            sigma=np.array([[eta**2 * sig**2 * t]]),
            epsilon=eps,
            t=t,
            anchor=np.array([x1, sig]),
        )
        value = q_step_1d(law, weight_fn_sabr(model, "Marginal"), payoff, nodes)
        return PriceEstimate(value, 0.0, 0, 0, MethodInfo("q_step_sabr_marginal", m=1, n=1))

    if mode == "TwoDimMc":
        if paths < 1000:
            raise ValueError("TwoDimMc needs paths >= 1000 for a meaningful standard error")
        vfs = build_sabr(model.z, model.sigma0, model.nu, model.rho)
        law = proxy_law(vfs, x, t, eps)
        seed = int(stream)
        total = 0.0
        total_sq = 0.0
        for start in range(0, paths, BLOCK_PATHS):
            stop = min(start + BLOCK_PATHS, paths)
            gen = substream(seed, "q_sabr_2d", start // BLOCK_PATHS)
            draws = sample(law, stop - start, gen)
            vals = payoff_values(payoff, map_underlying(payoff, draws[:, 0]))
            wts = sabr_twodim_weight(model, t, x1, sig, draws[:, 0], draws[:, 1])
            prod = vals * wts
            total += float(prod.sum())
            total_sq += float((prod * prod).sum())
        mean = total / paths
        var = max(total_sq / paths - mean * mean, 0.0)
        se = float(np.sqrt(var / paths))
        return PriceEstimate(mean, se, paths, seed, MethodInfo("q_step_sabr_2d_mc", m=1, n=1))

    raise ValueError("mode must be 'MarginalQuadrature' or 'TwoDimMc'")


def bachelier_call(mean: float, std: float, strike: float) -> float:
    """E[max(Y - K, 0)] for Y ~ N(mean, std^2)."""
    if std <= 0:
        return max(mean - strike, 0.0)
    d = (mean - strike) / std
    return (mean - strike) * ndtr(d) + std * _INV_SQRT_2PI * np.exp(-0.5 * d * d)


def bachelier_put(mean: float, std: float, strike: float) -> float:
    """E[max(K - Y, 0)] for Y ~ N(mean, std^2)."""
    return bachelier_call(mean, std, strike) - (mean - strike)


def lognormal_call(mean_log: float, std_log: float, strike: float) -> float:
    """E[max(e^Y - K, 0)] for Y ~ N(mean_log, std_log^2)."""
    if std_log <= 0:
        return max(np.exp(mean_log) - strike, 0.0)
    if strike <= 0:
        return float(np.exp(mean_log + std_log**2 / 2.0) - strike)
    d = (np.log(strike) - mean_log) / std_log
    fwd = np.exp(mean_log + std_log**2 / 2.0)
    return float(fwd * ndtr(std_log - d) - strike * ndtr(-d))


def black_scholes_call(spot: float, vol: float, maturity: float, strike: float) -> float:
    """Zero-rate Black-Scholes call on a geometric Brownian motion."""
    return lognormal_call(np.log(spot) - vol**2 * maturity / 2.0, vol * np.sqrt(maturity), strike)
