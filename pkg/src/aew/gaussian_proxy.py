"""Gaussian proxy law of a perturbed SDE at first order in the perturbation.

Truncating X^eps at first order around eps=0 gives X-bar = X^0 + eps * dX/deps,
an exactly Gaussian variable with mean X^0_t + eps*mu(t) and covariance
eps^2 * Sigma(t).  This module computes the deterministic skeleton X^0, its
Jacobian J, the shift mu, the covariance Sigma, and samples the resulting law.

Models whose drift vanishes at eps=0 (both built-in families) short-circuit to
exact closed forms: skeleton = anchor, J = I, mu(t) = t * dV0/deps(anchor),
Sigma(t) = t * sum_j Vj(anchor) Vj(anchor)^T.  Generic models fall back to a
fixed-step RK4 integration with Simpson quadrature on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import VectorFieldSet
from .rng import normal_inverse_cdf

RK4_STEPS_PER_UNIT = 256

# Ridge ladder for Cholesky of covariances that fail PSD by rounding only.
_RIDGE_LADDER = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


@dataclass(frozen=True)
class ProxyLaw:
    """The Gaussian law of the first-order truncation X-bar at time t.

    Args:
        skeleton: deterministic eps=0 state X^0_t.
        jacobian: state Jacobian J_t of the skeleton flow.
        mu: first-order mean shift mu(t).
        sigma: unscaled covariance Sigma(t); the law's covariance is eps^2*Sigma.
        epsilon: perturbation scale.
        t: elapsed time, > 0 (t=0 laws are degenerate points).
        anchor: starting state x.
    """

    skeleton: np.ndarray
    jacobian: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    epsilon: float
    t: float
    anchor: np.ndarray

    @property
    def dim(self) -> int:
        return self.skeleton.shape[0]

    @property
    def mean(self) -> np.ndarray:
        """Mean of X-bar: skeleton + eps * mu."""
        return self.skeleton + self.epsilon * self.mu

    @property
    def cov(self) -> np.ndarray:
        """Covariance of X-bar: eps^2 * Sigma."""
        return self.epsilon ** 2 * self.sigma

    def std1(self) -> float:
        """Standard deviation of the first coordinate."""
        return float(np.sqrt(self.cov[0, 0]))


def _drift_jacobian_fd(model: VectorFieldSet, x: np.ndarray) -> np.ndarray:
    """Central finite difference of the eps=0 drift, for the variational ODE."""
    n = model.state_dim
    jac = np.empty((n, n))
    for k in range(n):
        h = 1e-6 * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        jac[:, k] = (model.drift(0.0, xp) - model.drift(0.0, xm)) / (2.0 * h)
    return jac


def _rk4_grid(t: float) -> np.ndarray:
    steps = max(2, int(np.ceil(RK4_STEPS_PER_UNIT * t)))
    if steps % 2:
        steps += 1
    return np.linspace(0.0, t, steps + 1)


def _integrate_skeleton(model: VectorFieldSet, x: np.ndarray, t: float):
    """RK4 for the skeleton ODE and its variational equation on a fixed grid.

    Returns the time grid and arrays of states X^0 and Jacobians J at each node.
    """
    grid = _rk4_grid(t)
    n = model.state_dim
    xs = np.empty((grid.size, n))
    js = np.empty((grid.size, n, n))
    xc, jc = x.astype(float).copy(), np.eye(n)
    xs[0], js[0] = xc, jc

    def f(state, jmat):
        return model.drift(0.0, state), _drift_jacobian_fd(model, state) @ jmat

    for i in range(1, grid.size):
        h = grid[i] - grid[i - 1]
        k1x, k1j = f(xc, jc)
        k2x, k2j = f(xc + h / 2 * k1x, jc + h / 2 * k1j)
        k3x, k3j = f(xc + h / 2 * k2x, jc + h / 2 * k2j)
        k4x, k4j = f(xc + h * k3x, jc + h * k3j)
        xc = xc + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        jc = jc + h / 6 * (k1j + 2 * k2j + 2 * k3j + k4j)
        xs[i], js[i] = xc, jc
    if not np.all(np.isfinite(xc)) or not np.all(np.isfinite(jc)):
        raise ArithmeticError("skeleton ODE integration diverged")
    return grid, xs, js


def _simpson(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Composite Simpson rule on an even-interval uniform grid."""
    h = grid[1] - grid[0]
    w = np.ones(grid.size)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return h / 3.0 * np.tensordot(w, values, axes=(0, 0))


def skeleton_and_jacobian(model: VectorFieldSet, x, t: float):
    """Deterministic skeleton X^0_t and its Jacobian J_t.

    Args:
        model: perturbed SDE.
        x: starting state.
        t: elapsed time, >= 0.

    Returns:
        (X^0_t, J_t); exactly (x, I) when the eps=0 drift vanishes.
    """
    x = np.atleast_1d(np.asarray(x, float))
    if t < 0:
        raise ValueError("t must be nonnegative")
    if model.zero_drift_at_eps0 or t == 0:
        return x.copy(), np.eye(model.state_dim)
    _, xs, js = _integrate_skeleton(model, x, t)
    return xs[-1], js[-1]


def mean_shift(model: VectorFieldSet, x, t: float) -> np.ndarray:
    """First-order mean shift mu(t) = int_0^t J_t J_u^{-1} dV0/deps(X^0_u) du."""
    x = np.atleast_1d(np.asarray(x, float))
    if t < 0:
        raise ValueError("t must be nonnegative")
    if model.zero_drift_at_eps0 or t == 0:
        # Constant integrand along a constant skeleton: exactly linear in t.
        return t * np.atleast_1d(model.drift_eps_deriv_at_zero(x)).astype(float)
    grid, xs, js = _integrate_skeleton(model, x, t)
    jt = js[-1]
    vals = np.empty((grid.size, model.state_dim))
    for i in range(grid.size):
        vals[i] = jt @ np.linalg.solve(js[i], model.drift_eps_deriv_at_zero(xs[i]))
    return _simpson(vals, grid)


def covariance(model: VectorFieldSet, x, t: float) -> np.ndarray:
    """Unscaled covariance Sigma(t) transported along the skeleton flow."""
    x = np.atleast_1d(np.asarray(x, float))
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = model.state_dim
    if model.zero_drift_at_eps0 or t == 0:
        a = np.zeros((n, n))
        for vj in model.diffusion:
            v = np.atleast_1d(vj(x)).astype(float)
            a += np.outer(v, v)
        return t * a
    grid, xs, js = _integrate_skeleton(model, x, t)
    jt = js[-1]
    vals = np.empty((grid.size, n, n))
    for i in range(grid.size):
        acc = np.zeros((n, n))
        for vj in model.diffusion:
            v = jt @ np.linalg.solve(js[i], np.atleast_1d(vj(xs[i])))
            acc += np.outer(v, v)
        vals[i] = acc
    return _simpson(vals, grid)


def proxy_law(model: VectorFieldSet, x, t: float, epsilon: float) -> ProxyLaw:
    """Assemble the Gaussian proxy law of X-bar_t started at x.

    Args:
        model: perturbed SDE.
        x: starting state.
        t: elapsed time, > 0.
        epsilon: perturbation scale.
    """
    if not t > 0:
        raise ValueError("proxy law needs t > 0")
    x = np.atleast_1d(np.asarray(x, float))
    skel, jac = skeleton_and_jacobian(model, x, t)
    return ProxyLaw(
        skeleton=skel,
        jacobian=jac,
        mu=mean_shift(model, x, t),
        sigma=covariance(model, x, t),
        epsilon=float(epsilon),
        t=float(t),
        anchor=x.copy(),
    )


def cholesky_psd(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, tolerating rounding-level PSD violations.

    A ridge from a fixed ladder up to 1e-10 * trace may be added; needing more
    than that signals corrupted inputs and raises.
    """
    cov = np.asarray(cov, float)
    tr = float(np.trace(cov))
    if tr == 0.0 and not cov.any():
        return np.zeros_like(cov)
    for ridge in _RIDGE_LADDER:
        try:
            return np.linalg.cholesky(cov + ridge * tr * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(
        "covariance is not positive semidefinite beyond rounding tolerance"
    )


def sample(law: ProxyLaw, count: int, stream: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. samples of X-bar from its proxy law.

    Args:
        law: the Gaussian law.
        count: number of draws, >= 1.
        stream: substream generator (see rng.substream).

    Returns:
        Array of shape (count, N).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    chol = cholesky_psd(law.cov)
    z = normal_inverse_cdf(stream, (count, law.dim))
    return law.mean + z @ chol.T
