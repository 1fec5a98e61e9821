"""Euler-Maruyama Monte Carlo benchmark for the perturbed SDE models.

This is the slow, unbiased-up-to-discretization reference the expansion
scheme is measured against.  Paths are simulated in fixed-size blocks, each
block on its own addressed substream, so estimates are bit-identical for any
worker count and any block execution order.
"""

from __future__ import annotations

import numpy as np

from .estimates import MethodInfo, PriceEstimate
from .models import PayoffSpec, VectorFieldSet, map_underlying, payoff_values
from .rng import BLOCK_PATHS, substream

# Spot floor for sigma evaluation: the CEV volatility is defined for spot > 0
# and non-Lipschitz at 0; at the supported parameter ranges the boundary is
# statistically unreachable and the floor only prevents NaN.
SPOT_FLOOR_FRACTION = 1e-8


def _check_finite(state: np.ndarray, block_start: int):
    bad = ~np.isfinite(state)
    if bad.any():
        idx = int(np.argwhere(bad)[0][0])
        raise ArithmeticError(f"path {block_start + idx} exploded to a non-finite state")


def _terminal_local_vol(params, x0: float, T: float, steps: int, paths: int, seed: int) -> np.ndarray:
    eps = params.epsilon
    floor = SPOT_FLOOR_FRACTION * params.s0
    dt = T / steps
    sq = np.sqrt(dt)
    out = np.empty(paths)
    for start in range(0, paths, BLOCK_PATHS):
        stop = min(start + BLOCK_PATHS, paths)
        width = stop - start
        gen = substream(seed, "em_lv", start // BLOCK_PATHS)
        s = np.full(width, x0)
        for _ in range(steps):
            db = gen.standard_normal(width) * sq
            s = s + eps * params.sigma(np.maximum(s, floor)) * db
        _check_finite(s, start)
        out[start:stop] = s
    return out


def _terminal_sabr(params, x0: np.ndarray, T: float, steps: int, paths: int, seed: int) -> np.ndarray:
    eps, eta, rho, rho_bar = params.epsilon, params.eta, params.rho, params.rho_bar
    dt = T / steps
    sq = np.sqrt(dt)
    vol_drift = -0.5 * eps**2 * dt  # exact log-normal step for the vol factor
    out = np.empty((paths, 2))
    for start in range(0, paths, BLOCK_PATHS):
        stop = min(start + BLOCK_PATHS, paths)
        width = stop - start
        gen = substream(seed, "em_sabr", start // BLOCK_PATHS)
        x1 = np.full(width, float(x0[0]))
        sig = np.full(width, float(x0[1]))
        for _ in range(steps):
            db1 = gen.standard_normal(width) * sq
            db2 = gen.standard_normal(width) * sq
            dw = rho * db1 + rho_bar * db2
            x1 = x1 + (-eps * eta * sig**2 / 2.0) * dt + eps * eta * sig * db1
            sig = sig * np.exp(vol_drift + eps * dw)
        _check_finite(x1, start)
        out[start:stop, 0] = x1
        out[start:stop, 1] = sig
    return out


def _terminal_generic(model: VectorFieldSet, x0: np.ndarray, T: float, steps: int, paths: int, seed: int, epsilon: float) -> np.ndarray:
    n, d = model.state_dim, model.noise_dim
    dt = T / steps
    sq = np.sqrt(dt)
    out = np.empty((paths, n))
    for start in range(0, paths, BLOCK_PATHS):
        stop = min(start + BLOCK_PATHS, paths)
        width = stop - start
        gen = substream(seed, "em_gen", start // BLOCK_PATHS)
        state = np.tile(x0, (width, 1))
        for _ in range(steps):
            db = gen.standard_normal((width, d)) * sq
            incr = model.drift(epsilon, state) * dt
            for j in range(d):
                incr = incr + epsilon * model.diffusion[j](state) * db[:, j:j + 1]
            state = state + incr
        _check_finite(state, start)
        out[start:stop] = state
    return out


def em_terminal_states(model: VectorFieldSet, x0, T: float, steps: int, paths: int, stream: int, epsilon: float | None = None) -> np.ndarray:
    """Terminal states of the Euler-Maruyama simulation, shape (paths, N).

    Exposed so that one simulation can price a whole strike grid; em_price is
    a thin average over this output.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if paths < 1000:
        raise ValueError("paths must be >= 1000")
    x0 = np.atleast_1d(np.asarray(x0, float))
    seed = int(stream)
    if model.kind == "local_vol":
        return _terminal_local_vol(model.params, float(x0[0]), T, steps, paths, seed)[:, None]
    if model.kind == "sabr":
        return _terminal_sabr(model.params, x0, T, steps, paths, seed)
    if epsilon is None:
        raise ValueError("generic models need an explicit epsilon")
    return _terminal_generic(model, x0, T, steps, paths, seed, epsilon)


def em_price(model: VectorFieldSet, x0, payoff: PayoffSpec, T: float, steps: int, paths: int, stream: int, epsilon: float | None = None) -> PriceEstimate:
    """Benchmark price by Euler-Maruyama Monte Carlo.

    Local-volatility paths evaluate sigma at a floored spot; SABR advances the
    vol factor by its exact log-normal step and the log-spot by Euler with
    correlated increments.

    Args:
        model: VectorFieldSet (built-in families get fast paths).
        x0: initial state.
        payoff: payoff specification.
        T: maturity.
        steps: Euler steps, >= 1.
        paths: sample count, >= 1000.
        stream: master seed addressing the substream family.
        epsilon: perturbation scale; only needed for generic models.
    """
    states = em_terminal_states(model, x0, T, steps, paths, stream, epsilon)
    vals = payoff_values(payoff, map_underlying(payoff, states[:, 0]))
    value = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(paths))
    return PriceEstimate(value, se, paths, int(stream), MethodInfo("em", n=steps))


def price_strikes_from_states(states: np.ndarray, kind: str, strikes, underlying_map: str = "level"):
    """Price a strike grid from one terminal-state sample.

    Returns:
        dict strike -> (price, standard error).
    """
    first = states[:, 0]
    out = {}
    for k in strikes:
        p = PayoffSpec(kind, float(k), underlying_map)
        vals = payoff_values(p, map_underlying(p, first))
        out[float(k)] = (float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size)))
    return out
