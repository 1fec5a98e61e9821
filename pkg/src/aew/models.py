"""Perturbed SDE models and payoff specifications.

A model is a system dX_t = V0(eps, X_t) dt + eps * sum_j Vj(X_t) dB^j_t whose
diffusion (and possibly drift) carries a small perturbation scale eps.  The
generic container ``VectorFieldSet`` holds the vector fields and the analytic
derivatives the correction weights need; ``build_local_vol`` and
``build_sabr`` construct the two concrete model families used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class VectorFieldSet:
    """A perturbed SDE: dimensions, vector fields, and their derivatives.

    Args:
        state_dim: number of state coordinates N.
        noise_dim: number of driving Brownian motions d.
        drift: V0(eps, x) -> real^N.
        drift_eps_deriv_at_zero: d/d(eps) V0(eps, x) at eps=0 -> real^N.
        diffusion: tuple of d maps Vj(x) -> real^N.
        diffusion_jacobian: tuple of d maps x -> real^{NxN} with entries
            d(Vj)_i / d(x_k).
        zero_drift_at_eps0: True when V0(0, .) vanishes identically, which
            makes the eps=0 skeleton constant and its Jacobian the identity.
        kind: tag used for fast-path dispatch ("local_vol", "sabr", "generic").
        params: the originating parameter object, if any.
    """

    state_dim: int
    noise_dim: int
    drift: Callable[[float, np.ndarray], np.ndarray]
    drift_eps_deriv_at_zero: Callable[[np.ndarray], np.ndarray]
    diffusion: Sequence[Callable[[np.ndarray], np.ndarray]]
    diffusion_jacobian: Sequence[Callable[[np.ndarray], np.ndarray]]
    zero_drift_at_eps0: bool = False
    kind: str = "generic"
    params: object = None

    def __post_init__(self):
        if self.state_dim < 1 or self.noise_dim < 1:
            raise ValueError("state_dim and noise_dim must be positive")
        if len(self.diffusion) != self.noise_dim:
            raise ValueError("need one diffusion field per noise dimension")
        if len(self.diffusion_jacobian) != self.noise_dim:
            raise ValueError("need one Jacobian per diffusion field")


@dataclass(frozen=True)
class LocalVolCev:
    """Driftless CEV-type local volatility model dS = eps*sigma(S) dB.

    The volatility function is sigma(S) = s0^(1-beta) * S^beta, anchored so
    that sigma(s0) = s0.

    Args:
        s0: initial spot, also the volatility scale anchor.
        beta: elasticity exponent in (0, 1].
        epsilon: perturbation scale in (0, 1].
    """

    s0: float
    beta: float
    epsilon: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")

    def _check_domain(self, s):
        if np.any(np.asarray(s) <= 0):
            raise ValueError("local volatility model is defined for spot > 0")

    def sigma(self, s):
        """Volatility sigma(s) = s0^(1-beta) * s^beta; requires s > 0."""
        self._check_domain(s)
        return self.s0 ** (1.0 - self.beta) * np.asarray(s, float) ** self.beta

    def sigma_prime(self, s):
        """First derivative sigma'(s)."""
        self._check_domain(s)
        return self.beta * self.s0 ** (1.0 - self.beta) * np.asarray(s, float) ** (self.beta - 1.0)

    def sigma_second(self, s):
        """Second derivative sigma''(s)."""
        self._check_domain(s)
        b = self.beta
        return b * (b - 1.0) * self.s0 ** (1.0 - b) * np.asarray(s, float) ** (b - 2.0)


@dataclass(frozen=True)
class LogNormalSabr:
    """Perturbed log-normal SABR model in the state (X1, sigma) = (log-spot, vol).

    The system is
        dX1 = -eps*eta*sigma^2/2 dt + eps*eta*sigma dB^1,
        dsigma = eps*rho*sigma dB^1 + eps*sqrt(1-rho^2)*sigma dB^2,
    with eta = 1/nu and eps = nu, so at the nominal eps the pair (e^{X1}, sigma)
    is exactly the log-normal SABR diffusion with vol-of-vol nu.

    Args:
        z: initial spot.
        sigma0: initial volatility.
        nu: vol-of-vol; equals the perturbation scale eps.
        rho: spot/vol correlation in (-1, 1).
    """

    z: float
    sigma0: float
    nu: float
    rho: float
    eta: float = field(init=False)
    x0: float = field(init=False)

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("z must be positive")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if not abs(self.rho) < 1:
            raise ValueError("rho must lie strictly inside (-1, 1)")
        object.__setattr__(self, "eta", 1.0 / self.nu)
        object.__setattr__(self, "x0", float(np.log(self.z)))

    @property
    def epsilon(self) -> float:
        """Perturbation scale; identical to nu by construction."""
        return self.nu

    @property
    def rho_bar(self) -> float:
        """sqrt(1 - rho^2), the orthogonal correlation weight."""
        return float(np.sqrt(1.0 - self.rho * self.rho))


@dataclass(frozen=True)
class PayoffSpec:
    """Terminal payoff f applied to a mapped underlying.

    Args:
        kind: "call", "put", or "identity".
        strike: strike K; ignored for identity.
        underlying_map: "level" reads the first state coordinate directly,
            "exp_first" exponentiates it (log-spot models).
    """

    kind: str
    strike: float = 0.0
    underlying_map: str = "level"

    def __post_init__(self):
        if self.kind not in ("call", "put", "identity"):
            raise ValueError(f"unknown payoff kind {self.kind!r}")
        if self.underlying_map not in ("level", "exp_first"):
            raise ValueError(f"unknown underlying map {self.underlying_map!r}")


def build_local_vol(s0: float, beta: float, epsilon: float) -> VectorFieldSet:
    """Assemble the one-dimensional local volatility model as a VectorFieldSet.

    Args:
        s0: initial spot and volatility anchor, > 0.
        beta: elasticity in (0, 1].
        epsilon: perturbation scale in (0, 1].
    """
    p = LocalVolCev(s0, beta, epsilon)

    def drift(eps, x):
        return np.zeros_like(np.asarray(x, float))

    def drift_eps(x):
        return np.zeros_like(np.asarray(x, float))

    def v1(x):
        return np.atleast_1d(p.sigma(np.asarray(x, float)[..., 0]))

    def v1_jac(x):
        return np.atleast_2d(p.sigma_prime(np.asarray(x, float)[..., 0]))

    return VectorFieldSet(
        state_dim=1,
        noise_dim=1,
        drift=drift,
        drift_eps_deriv_at_zero=drift_eps,
        diffusion=(v1,),
        diffusion_jacobian=(v1_jac,),
        zero_drift_at_eps0=True,
        kind="local_vol",
        params=p,
    )


def build_sabr(z: float, sigma0: float, nu: float, rho: float) -> VectorFieldSet:
    """Assemble the two-dimensional perturbed SABR model as a VectorFieldSet.

    Args:
        z: initial spot, > 0.
        sigma0: initial volatility, > 0.
        nu: vol-of-vol in (0, 1]; the perturbation scale.
        rho: correlation, |rho| < 1.
    """
    p = LogNormalSabr(z, sigma0, nu, rho)
    eta, rho_bar = p.eta, p.rho_bar

    def drift(eps, x):
        x = np.asarray(x, float)
        return np.stack([-eps * eta * x[..., 1] ** 2 / 2.0, np.zeros_like(x[..., 1])], axis=-1)

    def drift_eps(x):
        x = np.asarray(x, float)
        return np.stack([-eta * x[..., 1] ** 2 / 2.0, np.zeros_like(x[..., 1])], axis=-1)

    def v1(x):
        x = np.asarray(x, float)
        return np.stack([eta * x[..., 1], rho * x[..., 1]], axis=-1)

    def v2(x):
        x = np.asarray(x, float)
        return np.stack([np.zeros_like(x[..., 1]), rho_bar * x[..., 1]], axis=-1)

    def v1_jac(x):
        return np.array([[0.0, eta], [0.0, rho]])

    def v2_jac(x):
        return np.array([[0.0, 0.0], [0.0, rho_bar]])

    return VectorFieldSet(
        state_dim=2,
        noise_dim=2,
        drift=drift,
        drift_eps_deriv_at_zero=drift_eps,
        diffusion=(v1, v2),
        diffusion_jacobian=(v1_jac, v2_jac),
        zero_drift_at_eps0=True,
        kind="sabr",
        params=p,
    )


def payoff_values(p: PayoffSpec, u) -> np.ndarray:
    """Vectorized payoff on already-mapped underlying values u."""
    u = np.asarray(u, float)
    if p.kind == "call":
        return np.maximum(u - p.strike, 0.0)
    if p.kind == "put":
        return np.maximum(p.strike - u, 0.0)
    return u


def map_underlying(p: PayoffSpec, first_coord) -> np.ndarray:
    """Map the first state coordinate to the payoff underlying."""
    y = np.asarray(first_coord, float)
    return np.exp(y) if p.underlying_map == "exp_first" else y


def eval_payoff(p: PayoffSpec, state) -> float:
    """Evaluate a payoff at a single state vector (or scalar state).

    Args:
        p: payoff specification.
        state: state vector of length N, or a bare scalar for 1-d models.
    """
    state = np.atleast_1d(np.asarray(state, float))
    if not np.all(np.isfinite(state)):
        raise ValueError("payoff evaluation needs a finite state")
    return float(payoff_values(p, map_underlying(p, state[0])))
