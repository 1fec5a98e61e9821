"""Shared fixtures: model instances and the expensive Monte Carlo artifacts.

The heavyweight fixtures (benchmark path sets, pathwise weight-oracle terms)
are session-scoped so the full run pays for each of them once; tests that do
not request them never trigger the computation.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from aew.benchmark import em_terminal_states
from aew.models import LocalVolCev, LogNormalSabr, build_local_vol, build_sabr
from aew.weights import oracle_terms_local_vol, oracle_terms_sabr

# Reference parameter sets used throughout the suite.
LV = LocalVolCev(s0=100.0, beta=0.5, epsilon=0.4)
SABR = LogNormalSabr(z=100.0, sigma0=0.3, nu=0.1, rho=-0.5)
SABR_X0 = np.array([math.log(100.0), 0.3])

STRIKE_GRID = tuple(float(k) for k in range(50, 201, 10))


@pytest.fixture(scope="session")
def lv_params() -> LocalVolCev:
    return LV


@pytest.fixture(scope="session")
def sabr_params() -> LogNormalSabr:
    return SABR


@pytest.fixture(scope="session")
def lv_model():
    return build_local_vol(LV.s0, LV.beta, LV.epsilon)


@pytest.fixture(scope="session")
def sabr_model():
    return build_sabr(SABR.z, SABR.sigma0, SABR.nu, SABR.rho)


@pytest.fixture(scope="session")
def lv_bench_states(lv_model) -> np.ndarray:
    """Euler-Maruyama terminal spots, 10^6 paths / 500 steps, seed 7."""
    return em_terminal_states(lv_model, np.array([LV.s0]), 1.0, 500, 10**6, 7)


@pytest.fixture(scope="session")
def lv_bench_states_big(lv_model) -> np.ndarray:
    """Euler-Maruyama terminal spots, 10^7 paths / 1000 steps, seed 7.

    The error-transfer comparisons need the benchmark noise floor well below
    the scheme errors being predicted; this is the expensive fixture of the
    suite (about three minutes).
    """
    return em_terminal_states(lv_model, np.array([LV.s0]), 1.0, 1000, 10**7, 7)


@pytest.fixture(scope="session")
def sabr_bench_states(sabr_model) -> np.ndarray:
    """SABR Euler-Maruyama terminal (log-spot, vol) pairs, 10^6 / 1000, seed 7."""
    return em_terminal_states(sabr_model, SABR_X0, 1.0, 1000, 10**6, 7)


@pytest.fixture(scope="session")
def lv_oracle_terms() -> dict:
    """Pathwise-simulation oracle terms for the local-vol weights, seed 404."""
    return oracle_terms_local_vol(LV, 1.0, 100.0, 10**6, 404)


@pytest.fixture(scope="session")
def sabr_oracle_terms() -> dict:
    """Pathwise-simulation oracle terms for the SABR weight, seed 505."""
    return oracle_terms_sabr(SABR, 1.0, SABR_X0, 10**6, 505)
