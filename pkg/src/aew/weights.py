"""Hermite polynomials, conditional expectations of iterated integrals, and
the closed-form correction weights of the expansion scheme.

The one-step operator prices E[f(X_T)] as E[f(X-bar) * M^m(t, x, X-bar)] where
X-bar is the Gaussian proxy and M^m is a polynomial correction kernel obtained
by integrating the higher-order terms of the eps-expansion by parts on
Gaussian space.  M^m has unit expectation under the proxy law, so the weighted
kernel is a signed density expansion of order m.

Every closed form here was derived offline through the Gaussian divergence
operator and is validated against ``weight_oracle_mc``, a pathwise Monte Carlo
estimator that never touches the closed forms: it Euler-integrates the
variational systems for the eps-derivative processes on a fine Brownian grid
and applies the pre-integration-by-parts expressions directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .estimates import MethodInfo, PriceEstimate
from .models import LocalVolCev, LogNormalSabr, PayoffSpec, VectorFieldSet, map_underlying, payoff_values
from .rng import ORACLE_BLOCK_PATHS, substream

ORACLE_BROWNIAN_STEPS = 1024


def _hermite_any(l: int, xi, v) -> np.ndarray:
    """Hermite polynomial h_l(xi; v) with variance parameter v, any degree."""
    xi = np.asarray(xi, float)
    h_prev = np.ones_like(xi)
    if l == 0:
        return h_prev
    h = xi.copy()
    for k in range(1, l):
        h, h_prev = xi * h - k * v * h_prev, h
    return h


def hermite(l: int, xi, v) -> np.ndarray:
    """Hermite polynomial with variance parameter: h0=1, h1=xi, h2=xi^2-v, ...

    Args:
        l: degree, in {0, 1, 2, 3, 4}.
        xi: evaluation point(s).
        v: variance parameter, > 0.

    The recurrence is h_{l+1} = xi*h_l - l*v*h_{l-1}.
    """
    if l not in (0, 1, 2, 3, 4):
        raise ValueError("hermite degree must lie in {0,...,4}")
    if not v > 0:
        raise ValueError("variance parameter must be positive")
    return _hermite_any(l, xi, v)


def cond_exp_iter2(c2: float, c3: float, xi, v) -> np.ndarray:
    """Conditional expectation of a double iterated Wiener integral.

    For integrands with constant overlap densities c2 = q2.q1 and c3 = q3.q1
    on a unit time interval, the nested overlap integral is c2*c3/2 and the
    conditional expectation given the degree-one integral equal to xi is
    (c2*c3/2) * h2(xi; v) / v^2.

    Args:
        c2: overlap of the inner integrand against q1.
        c3: overlap of the outer integrand against q1.
        xi: conditioning value.
        v: variance of the conditioning integral, > 0.
    """
    if not v > 0:
        raise ValueError("variance parameter must be positive")
    return 0.5 * c2 * c3 * _hermite_any(2, xi, v) / v**2


def cond_exp_iter3(coefficient: float, xi, v) -> np.ndarray:
    """Conditional expectation of a triple iterated Wiener integral.

    Args:
        coefficient: the triple nested overlap integral.
        xi: conditioning value.
        v: variance of the conditioning integral, > 0.

    Returns:
        coefficient * h3(xi; v) / v^3.
    """
    if not v > 0:
        raise ValueError("variance parameter must be positive")
    return coefficient * _hermite_any(3, xi, v) / v**3


@dataclass(frozen=True)
class WeightFunction:
    """An evaluatable correction weight M^m(t, x, y).

    Args:
        order: expansion order m in {0, 1, 2}.
        model_tag: one of "LocalVolM0", "LocalVolM1", "LocalVolM2",
            "SabrM1TwoDim", "SabrM1Marginal".
        eval: function (t, anchor_state, y) -> weight values; y is scalar-like
            for one-dimensional kernels and (..., 2) for the two-dimensional one.
        params: captured model parameters.
    """

    order: int
    model_tag: str
    eval: Callable
    params: object


def weight_local_vol(m: int, model: LocalVolCev, t: float, x, y):
    """Closed-form local-volatility weight M^m(t, x, y), vectorized in x, y.

    In the standardized Brownian coordinate b = (y - x)/(eps*sigma(x)) with
    variance parameter t:

        M^0 = 1
        M^1 = M^0 + eps * sigma'(x) * h3(b; t) / (2t)
        M^2 = M^1 + eps^2 * [ (sigma''*sigma + sigma'^2)(x)/(6t) * h4(b; t)
                              + (sigma''*sigma)(x)/4 * h2(b; t)
                              + sigma'(x)^2/(8t^2) *
                                (h6(b; t) + 4t*h4(b; t) + 2t^2*h2(b; t)) ]

    Args:
        m: expansion order in {0, 1, 2}.
        model: local volatility parameters.
        t: step length, > 0.
        x: anchor spot(s), > 0.
        y: evaluation point(s).
    """
    if m not in (0, 1, 2):
        raise ValueError("order m must lie in {0, 1, 2}")
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = np.ones(np.broadcast(x, y).shape)
    if m == 0:
        return out
    eps = model.epsilon
    s = model.sigma(x)
    sp = model.sigma_prime(x)
    b = (y - x) / (eps * s)
    out = out + eps * sp * _hermite_any(3, b, t) / (2.0 * t)
    if m == 1:
        return out
    s2s = model.sigma_second(x) * s
    h2 = _hermite_any(2, b, t)
    h4 = _hermite_any(4, b, t)
    h6 = _hermite_any(6, b, t)
    term_a = (s2s + sp**2) / (6.0 * t) * h4 + s2s / 4.0 * h2
    term_b = sp**2 / (8.0 * t**2) * (h6 + 4.0 * t * h4 + 2.0 * t**2 * h2)
    return out + eps**2 * (term_a + term_b)


def sabr_twodim_weight(model: LogNormalSabr, t: float, x1, sig, y1, y2):
    """First-order two-dimensional SABR weight, vectorized in all arguments.

    Coordinates: b1 is the standardized driver of the log-spot, w the
    standardized vol deviation, b2 the driver orthogonal to b1.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    eps, eta, rho, rho_bar = model.epsilon, model.eta, model.rho, model.rho_bar
    x1 = np.asarray(x1, float)
    sig = np.asarray(sig, float)
    y1 = np.asarray(y1, float)
    y2 = np.asarray(y2, float)
    b1 = (y1 - x1 + eps * eta * sig**2 * t / 2.0) / (eps * eta * sig)
    w = (y2 - sig) / (eps * sig)
    b2 = (w - rho * b1) / rho_bar
    corr = (
        (b1 - (rho / rho_bar) * b2) * (b1 * w - rho * t - sig * t * w) / (2.0 * t)
        + b2 * (w**2 - t) / (2.0 * t * rho_bar)
        - 1.5 * w
    )
    return 1.0 + eps * corr


def sabr_marginal_weight(model: LogNormalSabr, t: float, x1, sig, y):
    """First-order SABR weight conditioned on the log-spot coordinate only.

    M-hat^1 = 1 + eps * rho * (h3(b1; t) - sig*t*h2(b1; t)) / (2t), where
    b1 = (y - x1 + eps*eta*sig^2*t/2) / (eps*eta*sig).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    eps, eta, rho = model.epsilon, model.eta, model.rho
    x1 = np.asarray(x1, float)
    sig = np.asarray(sig, float)
    y = np.asarray(y, float)
    b1 = (y - x1 + eps * eta * sig**2 * t / 2.0) / (eps * eta * sig)
    corr = rho * (_hermite_any(3, b1, t) - sig * t * _hermite_any(2, b1, t)) / (2.0 * t)
    return 1.0 + eps * corr


def weight_sabr(kind: str, model: LogNormalSabr, t: float, x, y):
    """SABR first-order weight of the requested conditioning.

    Args:
        kind: "TwoDim" (y is a pair (y1, y2)) or "Marginal" (y is the scalar
            log-spot coordinate).
        model: SABR parameters.
        t: step length, > 0.
        x: anchor state (x1, sigma).
        y: evaluation point(s).
    """
    x = np.asarray(x, float)
    x1, sig = x[..., 0], x[..., 1]
    if kind == "TwoDim":
        y = np.asarray(y, float)
        return sabr_twodim_weight(model, t, x1, sig, y[..., 0], y[..., 1])
    if kind == "Marginal":
        return sabr_marginal_weight(model, t, x1, sig, y)
    raise ValueError("kind must be 'TwoDim' or 'Marginal'")


def weight_fn_local_vol(model: LocalVolCev, m: int) -> WeightFunction:
    """WeightFunction wrapper for the local-volatility closed forms."""
    if m not in (0, 1, 2):
        raise ValueError("order m must lie in {0, 1, 2}")

    def _eval(t, x, y):
        anchor = np.asarray(x, float)
        anchor = anchor[..., 0] if anchor.ndim else anchor
        return weight_local_vol(m, model, t, anchor, y)

    return WeightFunction(order=m, model_tag=f"LocalVolM{m}", eval=_eval, params=model)


def weight_fn_sabr(model: LogNormalSabr, kind: str) -> WeightFunction:
    """WeightFunction wrapper for the SABR first-order closed forms."""
    if kind not in ("TwoDim", "Marginal"):
        raise ValueError("kind must be 'TwoDim' or 'Marginal'")

    def _eval(t, x, y):
        return weight_sabr(kind, model, t, np.asarray(x, float), y)

    return WeightFunction(order=1, model_tag=f"SabrM1{kind}", eval=_eval, params=model)


def negative_kernel_range(w: WeightFunction, t: float, anchor, mean: float, std: float, span: float = 8.0, points: int = 4001):
    """Report where the signed kernel M^m * density is negative.

    Scans mean +/- span standard deviations and returns the (low, high) range
    of y with negative weight, or None if the weight stays nonnegative.  The
    kernel is not a probability density; this diagnostic makes the negative
    region visible instead of clamping it.
    """
    ys = np.linspace(mean - span * std, mean + span * std, points)
    vals = w.eval(t, anchor, ys)
    neg = ys[vals < 0.0]
    if neg.size == 0:
        return None
    return float(neg.min()), float(neg.max())


def _payoff_and_slope(payoff: PayoffSpec, y1: np.ndarray):
    """Payoff value and its a.e. derivative with respect to the first state
    coordinate, for call/put/identity payoffs on either underlying map."""
    u = map_underlying(payoff, y1)
    vals = payoff_values(payoff, u)
    du = u if payoff.underlying_map == "exp_first" else np.ones_like(u)
    if payoff.kind == "call":
        slope = np.where(u > payoff.strike, du, 0.0)
    elif payoff.kind == "put":
        slope = np.where(u < payoff.strike, -du, 0.0)
    else:
        slope = du
    return vals, slope


def oracle_terms_local_vol(model: LocalVolCev, t: float, x: float, paths: int, seed: int):
    """Pathwise ingredients of the oracle for the local-volatility model.

    Euler-integrates the variational systems for the first three
    eps-derivative processes of the spot on a fine Brownian grid and returns,
    per path: the proxy terminal value, the second- and third-order correction
    functionals, and the integration-by-parts core that converts the
    second-derivative-squared term into a first-derivative expectation.

    Returns:
        dict with arrays "s_bar", "g2", "g3", "ibp_core" of length `paths`.
    """
    eps = model.epsilon
    s = float(model.sigma(x))
    sp = float(model.sigma_prime(x))
    s2 = float(model.sigma_second(x))
    nsteps = ORACLE_BROWNIAN_STEPS
    dt = t / nsteps
    sq = np.sqrt(dt)

    s_bar = np.empty(paths)
    g2 = np.empty(paths)
    g3 = np.empty(paths)
    ibp = np.empty(paths)
    for start in range(0, paths, ORACLE_BLOCK_PATHS):
        stop = min(start + ORACLE_BLOCK_PATHS, paths)
        width = stop - start
        gen = substream(seed, "oracle_lv", start // ORACLE_BLOCK_PATHS)
        b = np.zeros(width)
        d1 = np.zeros(width)
        d2 = np.zeros(width)
        d3 = np.zeros(width)
        d1l = 0.0  # d(D1)/d(lambda) along the shift h(s)=s is deterministic
        d2l = np.zeros(width)
        for _ in range(nsteps):
            db = gen.standard_normal(width) * sq
            # Left-point increments; order matters so each update sees the
            # previous step's state.
            d3 += (3.0 * s2 * d1 * d1 + 3.0 * sp * d2) * db
            d2l += 2.0 * sp * (d1l * db + d1 * dt)
            d2 += 2.0 * sp * d1 * db
            d1 += s * db
            d1l += s * dt
            b += db
        s_bar[start:stop] = x + eps * d1
        half_d2 = d2 / 2.0
        g2[start:stop] = half_d2
        g3[start:stop] = d3 / 6.0
        # E[f''(S)G] -> E[f'(S) * (G*B_t - Lambda(G)) / (eps*sigma*t)] with
        # G = (D2/2)^2 and Lambda(G) = G's derivative along the shift.
        lam = half_d2 * d2l  # d/d(lambda) of (D2/2)^2 = (D2/2)*(dD2/dlambda)
        ibp[start:stop] = (half_d2**2 * b - lam) / (s * t)
    return {"s_bar": s_bar, "g2": g2, "g3": g3, "ibp_core": ibp}


def oracle_terms_sabr(model: LogNormalSabr, t: float, x, paths: int, seed: int):
    """Pathwise ingredients of the oracle for the SABR model.

    Returns:
        dict with arrays "x_bar" (proxy log-spot) and "g2x" (half the
        second eps-derivative of the log-spot) of length `paths`.
    """
    eps, eta, rho, rho_bar = model.epsilon, model.eta, model.rho, model.rho_bar
    x = np.asarray(x, float)
    x1, sig = float(x[0]), float(x[1])
    nsteps = ORACLE_BROWNIAN_STEPS
    dt = t / nsteps
    sq = np.sqrt(dt)

    x_bar = np.empty(paths)
    g2x = np.empty(paths)
    for start in range(0, paths, ORACLE_BLOCK_PATHS):
        stop = min(start + ORACLE_BLOCK_PATHS, paths)
        width = stop - start
        gen = substream(seed, "oracle_sabr", start // ORACLE_BLOCK_PATHS)
        b1 = np.zeros(width)
        w = np.zeros(width)
        d2x = np.zeros(width)
        for _ in range(nsteps):
            db1 = gen.standard_normal(width) * sq
            db2 = gen.standard_normal(width) * sq
            dw = rho * db1 + rho_bar * db2
            d2x += 2.0 * eta * sig * w * (db1 - sig * dt)
            w += dw
            b1 += db1
        d1x = eta * sig * b1 - eta * sig**2 * t / 2.0
        x_bar[start:stop] = x1 + eps * d1x
        g2x[start:stop] = d2x / 2.0
    return {"x_bar": x_bar, "g2x": g2x}


def oracle_price_from_terms(model, m: int, terms: dict, payoff: PayoffSpec, seed: int) -> PriceEstimate:
    """Assemble the oracle price for one payoff from precomputed path terms."""
    eps = model.epsilon
    if "g2x" in terms:  # SABR terms
        if m != 1:
            raise ValueError("the SABR oracle implements order m=1 only")
        y1 = terms["x_bar"]
        vals, slope = _payoff_and_slope(payoff, y1)
        tot = vals + eps**2 * slope * terms["g2x"]
    else:
        y1 = terms["s_bar"]
        vals, slope = _payoff_and_slope(payoff, y1)
        tot = vals
        if m >= 1:
            tot = tot + eps**2 * slope * terms["g2"]
        if m >= 2:
            tot = tot + eps**3 * slope * terms["g3"] + eps**3 / 2.0 * slope * terms["ibp_core"]
    paths = tot.size
    value = float(tot.mean())
    se = float(tot.std(ddof=1) / np.sqrt(paths))
    return PriceEstimate(value, se, paths, seed, MethodInfo("weight_oracle_mc", m=m))


def weight_oracle_mc(model: VectorFieldSet, m: int, t: float, x, payoff: PayoffSpec, paths: int, stream: int) -> PriceEstimate:
    """Monte Carlo oracle for the weighted one-step price, independent of the
    closed-form weights.

    Simulates Brownian paths on a fine grid, Euler-integrates the variational
    systems for the eps-derivative processes, and evaluates the
    pre-integration-by-parts correction expectations directly (the one
    second-derivative term is reduced by a single Gaussian integration by
    parts).  This is the ground truth the closed forms are validated against.

    Args:
        model: a built local-volatility or SABR VectorFieldSet.
        m: expansion order (local vol: 0..2, SABR: 1).
        t: step length, > 0.
        x: anchor state.
        payoff: payoff specification; call/put/identity.
        paths: Monte Carlo sample count.
        stream: master seed addressing the deterministic substream family.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    seed = int(stream)
    if model.kind == "local_vol":
        if m not in (0, 1, 2):
            raise ValueError("order m must lie in {0, 1, 2}")
        anchor = float(np.atleast_1d(np.asarray(x, float))[0])
        terms = oracle_terms_local_vol(model.params, t, anchor, paths, seed)
        return oracle_price_from_terms(model.params, m, terms, payoff, seed)
    if model.kind == "sabr":
        terms = oracle_terms_sabr(model.params, t, np.atleast_1d(np.asarray(x, float)), paths, seed)
        return oracle_price_from_terms(model.params, m, terms, payoff, seed)
    raise ValueError("the oracle supports the built-in model families only")
