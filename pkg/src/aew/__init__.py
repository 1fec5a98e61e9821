"""Weak approximation of perturbed SDE expectations by composed
asymptotic-expansion operators with closed-form correction weights,
with an Euler-Maruyama benchmark and an error-analysis harness."""

from .analysis import (
    ErrorReportRow,
    convergence_slope,
    error_rate,
    optimal_gamma,
    predict_error_next_m,
    predict_error_next_n,
)
from .benchmark import em_price, em_terminal_states
from .chain import GridSpec, chain_price_1d, chain_price_mc, chain_price_sabr_n2, make_grid
from .estimates import MethodInfo, PriceEstimate
from .gaussian_proxy import ProxyLaw, covariance, mean_shift, proxy_law, sample, skeleton_and_jacobian
from .models import (
    LocalVolCev,
    LogNormalSabr,
    PayoffSpec,
    VectorFieldSet,
    build_local_vol,
    build_sabr,
    eval_payoff,
)
from .pricer import bachelier_call, bachelier_put, black_scholes_call, lognormal_call, q_step_1d, q_step_sabr
from .weights import (
    WeightFunction,
    cond_exp_iter2,
    cond_exp_iter3,
    hermite,
    weight_fn_local_vol,
    weight_fn_sabr,
    weight_local_vol,
    weight_oracle_mc,
    weight_sabr,
)

__all__ = [
    "ErrorReportRow",
    "GridSpec",
    "LocalVolCev",
    "LogNormalSabr",
    "MethodInfo",
    "PayoffSpec",
    "PriceEstimate",
    "ProxyLaw",
    "VectorFieldSet",
    "WeightFunction",
    "bachelier_call",
    "bachelier_put",
    "black_scholes_call",
    "build_local_vol",
    "build_sabr",
    "chain_price_1d",
    "chain_price_mc",
    "chain_price_sabr_n2",
    "cond_exp_iter2",
    "cond_exp_iter3",
    "convergence_slope",
    "covariance",
    "em_price",
    "em_terminal_states",
    "error_rate",
    "eval_payoff",
    "hermite",
    "lognormal_call",
    "make_grid",
    "mean_shift",
    "optimal_gamma",
    "predict_error_next_m",
    "predict_error_next_n",
    "proxy_law",
    "q_step_1d",
    "q_step_sabr",
    "sample",
    "skeleton_and_jacobian",
    "weight_fn_local_vol",
    "weight_fn_sabr",
    "weight_local_vol",
    "weight_oracle_mc",
    "weight_sabr",
]

__version__ = "0.1.0"
