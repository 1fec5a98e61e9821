"""Composition of one-step expansion operators over a time partition.

The global scheme applies the weighted one-step operator over the grid
t_k = k^gamma * T / n^gamma, re-anchoring the Gaussian proxy at each step.
For one-dimensional models the composition runs as deterministic backward
induction on a spatial grid (cost linear in n); the nested Monte Carlo form
is kept as a fidelity mode for n <= 3, and the two-dimensional SABR case
implements the n=2 scheme with an outer weighted sample and an analytic
inner step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .benchmark import SPOT_FLOOR_FRACTION
from .estimates import MethodInfo, PriceEstimate
from .gaussian_proxy import ProxyLaw, proxy_law, sample
from .models import (
    LocalVolCev,
    LogNormalSabr,
    PayoffSpec,
    VectorFieldSet,
    build_sabr,
    map_underlying,
    payoff_values,
)
from .pricer import DEFAULT_NODES, Z_MAX, q_step_1d, split_quadrature
from .rng import normal_inverse_cdf, substream
from .weights import sabr_marginal_weight, sabr_twodim_weight, weight_fn_local_vol, weight_local_vol

DEFAULT_SPATIAL_GRID = 801
SPATIAL_SPAN_STD = 8.0

# Fixed Monte Carlo work-partition sizes (part of the determinism contract).
CHAIN_MC_BLOCK = 4096
CHAIN_MC_BLOCK_N3 = 256
SABR_CHAIN_BLOCK = 8192


@dataclass(frozen=True)
class GridSpec:
    """Power-law time partition t_k = k^gamma * T / n^gamma.

    Args:
        n: number of steps, >= 1.
        gamma: partition exponent, > 0; gamma=1 is the uniform grid.
        T: maturity, > 0.
    """

    n: int
    gamma: float
    T: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")


def make_grid(g: GridSpec):
    """Partition times and step lengths [(t_1, s_1), ..., (t_n, s_n)].

    t_0 = 0 and t_n = T exactly; every step length is positive.
    """
    ts = [g.T * (k / g.n) ** g.gamma for k in range(g.n + 1)]
    ts[-1] = g.T  # (n/n)^gamma == 1, keep terminal time exact regardless
    return [(ts[k], ts[k] - ts[k - 1]) for k in range(1, g.n + 1)]


def _kink_array(payoff: PayoffSpec, mean, std):
    """Standardized kink coordinates for broadcast anchors; clipped to range."""
    mean = np.asarray(mean, float)
    std = np.asarray(std, float)
    if payoff.kind == "identity":
        return np.zeros(np.broadcast(mean, std).shape)
    if payoff.underlying_map == "exp_first":
        if payoff.strike <= 0:
            return np.full(np.broadcast(mean, std).shape, -Z_MAX)
        y_kink = np.log(payoff.strike)
    else:
        y_kink = payoff.strike
    return np.clip((y_kink - mean) / std, -Z_MAX, Z_MAX)


def _interp_with_linear_tails(xs: np.ndarray, vals: np.ndarray):
    """Monotone cubic interpolant on [xs[0], xs[-1]], linear beyond the ends."""
    pch = PchipInterpolator(xs, vals, extrapolate=False)
    dpch = pch.derivative()
    lo_x, hi_x = xs[0], xs[-1]
    lo_v, hi_v = vals[0], vals[-1]
    lo_d, hi_d = float(dpch(lo_x)), float(dpch(hi_x))

    def f(y):
        y = np.asarray(y, float)
        out = pch(np.clip(y, lo_x, hi_x))
        out = np.where(y < lo_x, lo_v + lo_d * (y - lo_x), out)
        out = np.where(y > hi_x, hi_v + hi_d * (y - hi_x), out)
        return out

    return f


def _as_local_vol(model) -> LocalVolCev:
    if isinstance(model, LocalVolCev):
        return model
    if isinstance(model, VectorFieldSet) and model.kind == "local_vol":
        return model.params
    raise TypeError("expected a local-volatility model")


def _as_sabr(model) -> LogNormalSabr:
    if isinstance(model, LogNormalSabr):
        return model
    if isinstance(model, VectorFieldSet) and model.kind == "sabr":
        return model.params
    raise TypeError("expected a SABR model")


def _lv_law(params: LocalVolCev, x: float, t: float) -> ProxyLaw:
    return ProxyLaw(
        skeleton=np.array([x]),
        jacobian=np.eye(1),
        mu=np.zeros(1),
        sigma=np.array([[float(params.sigma(x)) ** 2 * t]]),
        epsilon=params.epsilon,
        t=t,
        anchor=np.array([x]),
    )


def chain_price_1d(model, payoff: PayoffSpec, g: GridSpec, m: int, spatial_grid: int = DEFAULT_SPATIAL_GRID, nodes: int = DEFAULT_NODES) -> PriceEstimate:
    """Deterministic backward induction of the weighted operator chain.

    Function values are carried on a fixed spatial grid spanning the anchor
    +/- 8 total standard deviations (clipped to positive spot), with monotone
    cubic interpolation between nodes and linear extrapolation beyond them.
    The n=1 case routes through the one-step operator unchanged.

    Args:
        model: local-volatility model (LocalVolCev or built VectorFieldSet).
        payoff: payoff on the spot level.
        g: time partition.
        m: expansion order in {0, 1, 2}.
        spatial_grid: node count, >= 101.
        nodes: quadrature nodes per half-integral.
    """
    params = _as_local_vol(model)
    if payoff.underlying_map != "level":
        raise ValueError("chain_price_1d prices payoffs on the spot level")
    if spatial_grid < 101:
        raise ValueError("spatial grid too coarse; need >= 101 points")
    info = MethodInfo("chain_grid", m=m, n=g.n, gamma=g.gamma)
    eps, x0 = params.epsilon, params.s0
    wfn = weight_fn_local_vol(params, m)

    if g.n == 1:
        value = q_step_1d(_lv_law(params, x0, g.T), wfn, payoff, nodes)
        return PriceEstimate(value, 0.0, 0, 0, info)

    steps = make_grid(g)
    total_std = eps * float(params.sigma(x0)) * np.sqrt(g.T)
    lo = max(x0 - SPATIAL_SPAN_STD * total_std, SPOT_FLOOR_FRACTION * x0)
    hi = x0 + SPATIAL_SPAN_STD * total_std
    xs = np.linspace(lo, hi, spatial_grid)

    cont = None  # None = exact terminal payoff
    for k in range(g.n, 1, -1):
        s_k = steps[k - 1][1]
        stds = eps * params.sigma(xs) * np.sqrt(s_k)
        if cont is None:
            z_split = _kink_array(payoff, xs, stds)
            values_of = lambda y: payoff_values(payoff, y)
        else:
            z_split = np.zeros(xs.size)
            values_of = cont
        anchors_col = xs[:, None]

        def integrand(y, _vals=values_of, _s=s_k, _a=anchors_col):
            return _vals(y) * weight_local_vol(m, params, _s, _a, y)

        vals = split_quadrature(xs, stds, z_split, integrand, nodes)
        cont = _interp_with_linear_tails(xs, vals)

    s_1 = steps[0][1]
    std0 = eps * float(params.sigma(x0)) * np.sqrt(s_1)

    def final_integrand(y):
        return cont(y) * weight_local_vol(m, params, s_1, x0, y)

    value = float(split_quadrature(x0, std0, 0.0, final_integrand, nodes))
    return PriceEstimate(value, 0.0, 0, 0, info)


def chain_price_mc(model, payoff: PayoffSpec, g: GridSpec, m: int, paths_per_level, stream: int) -> PriceEstimate:
    """Nested Monte Carlo composition: sampled proxy draws at every level.

    Cost grows as the product of the per-level path counts, so n is capped at
    3; use chain_price_1d for longer chains.

    Args:
        model: local-volatility model.
        payoff: payoff on the spot level.
        g: time partition with n <= 3.
        m: expansion order in {0, 1, 2}.
        paths_per_level: int (same count each level) or sequence of length n.
        stream: master seed.
    """
    params = _as_local_vol(model)
    if g.n > 3:
        raise ValueError("nested Monte Carlo cost is paths^n; n > 3 rejected, use chain_price_1d")
    counts = [int(paths_per_level)] * g.n if np.isscalar(paths_per_level) else [int(c) for c in paths_per_level]
    if len(counts) != g.n or any(c < 1 for c in counts):
        raise ValueError("need one positive path count per level")
    seed = int(stream)
    info = MethodInfo("chain_mc", m=m, n=g.n, gamma=g.gamma)
    eps, x0 = params.epsilon, params.s0
    floor = SPOT_FLOOR_FRACTION * params.s0
    steps = make_grid(g)
    svals = [s for (_, s) in steps]

    def inner_value(anchors: np.ndarray, level: int, gens: list) -> np.ndarray:
        """q_{level}(anchors) for anchors drawn at level-1; level counts from 1."""
        if level > g.n:
            return payoff_values(payoff, anchors)
        a = np.maximum(anchors, floor)
        s_k = svals[level - 1]
        stds = eps * params.sigma(a) * np.sqrt(s_k)
        z = normal_inverse_cdf(gens[level - 1], anchors.shape + (counts[level - 1],))
        y = a[..., None] + stds[..., None] * z
        w = weight_local_vol(m, params, s_k, a[..., None], y)
        q_next = inner_value(y, level + 1, gens)
        return np.mean(q_next * w, axis=-1)

    block = CHAIN_MC_BLOCK if g.n <= 2 else CHAIN_MC_BLOCK_N3
    outer = counts[0]
    total = 0.0
    total_sq = 0.0
    for start in range(0, outer, block):
        stop = min(start + block, outer)
        width = stop - start
        gens = [substream(seed, "chain_mc", level, start // block) for level in range(1, g.n + 1)]
        s_1 = svals[0]
        std1 = eps * float(params.sigma(x0)) * np.sqrt(s_1)
        y1 = x0 + std1 * normal_inverse_cdf(gens[0], width)
        w1 = weight_local_vol(m, params, s_1, x0, y1)
        q1 = inner_value(y1, 2, gens)
        terms = w1 * q1
        total += float(terms.sum())
        total_sq += float((terms * terms).sum())
    mean = total / outer
    var = max(total_sq / outer - mean * mean, 0.0)
    se = float(np.sqrt(var / outer))
    return PriceEstimate(mean, se, outer, seed, info)


def chain_price_sabr_n2(model, payoff: PayoffSpec, T: float, paths: int, stream: int, nodes: int = DEFAULT_NODES) -> PriceEstimate:
    """Two-step SABR scheme: outer weighted sample, analytic inner step.

    The pair (log-spot, vol) is sampled from its proxy law at T/2 and weighted
    with the two-dimensional first-order kernel; each draw is then priced over
    the remaining half-life by marginal-law quadrature with the one-dimensional
    kernel, re-anchored at the sampled state.

    Args:
        model: SABR model (LogNormalSabr or built VectorFieldSet).
        payoff: payoff on the exponentiated log-spot.
        T: maturity.
        paths: outer sample count, >= 10^4.
        stream: master seed.
    """
    params = _as_sabr(model)
    if paths < 10**4:
        raise ValueError("paths must be >= 10^4")
    if payoff.underlying_map != "exp_first":
        raise ValueError("the SABR chain prices payoffs on the exponentiated log-spot")
    seed = int(stream)
    eps, eta = params.epsilon, params.eta
    x0, sig0 = params.x0, params.sigma0
    s = T / 2.0
    vfs = build_sabr(params.z, params.sigma0, params.nu, params.rho)
    law1 = proxy_law(vfs, np.array([x0, sig0]), s, eps)
    sig_floor = 1e-8 * sig0

    total = 0.0
    total_sq = 0.0
    for start in range(0, paths, SABR_CHAIN_BLOCK):
        stop = min(start + SABR_CHAIN_BLOCK, paths)
        gen = substream(seed, "sabr_n2", start // SABR_CHAIN_BLOCK)
        draws = sample(law1, stop - start, gen)
        a1 = draws[:, 0]
        asig = np.maximum(draws[:, 1], sig_floor)
        w_out = sabr_twodim_weight(params, s, x0, sig0, draws[:, 0], draws[:, 1])
        mean_in = a1 - eps * eta * asig**2 * s / 2.0
        std_in = eps * eta * asig * np.sqrt(s)
        z_split = _kink_array(payoff, mean_in, std_in)
        a1c, asigc = a1[:, None], asig[:, None]

        def integrand(y):
            vals = payoff_values(payoff, map_underlying(payoff, y))
            return vals * sabr_marginal_weight(params, s, a1c, asigc, y)

        v_in = split_quadrature(mean_in, std_in, z_split, integrand, nodes)
        terms = w_out * v_in
        total += float(terms.sum())
        total_sq += float((terms * terms).sum())
    mean = total / paths
    var = max(total_sq / paths - mean * mean, 0.0)
    se = float(np.sqrt(var / paths))
    return PriceEstimate(mean, se, paths, seed, MethodInfo("chain_sabr_n2", m=1, n=2, gamma=1.0))
