"""Error rates, convergence-order fits, error-transfer laws, and the
time-grid exponent search.

The scheme's global error obeys two transfer laws: refining the time grid
multiplies the error by (n/(n+1))^(m/2), and raising the expansion order
multiplies it by eps/sqrt(n).  Both are exposed as predictors so observed
errors at one configuration forecast neighboring configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmark import em_terminal_states, price_strikes_from_states
from .chain import GridSpec, chain_price_1d
from .models import PayoffSpec, build_local_vol

GAMMA_COARSE = (0.1, 0.33, 0.5, 1.0, 1.5, 2.0)
GAMMA_FINE = tuple(round(0.80 + 0.05 * i, 2) for i in range(11))
DEFAULT_GAMMA_GRID = tuple(sorted(set(GAMMA_COARSE) | set(GAMMA_FINE)))


@dataclass(frozen=True)
class ErrorReportRow:
    """One cell of an error report: a method's price against the benchmark."""

    strike: float
    m: int
    n: int
    gamma: float
    weak_price: float
    benchmark_price: float
    benchmark_se: float
    error_rate_pct: float
    abs_error: float


def error_rate(weak: float, bench: float) -> float:
    """Percentage deviation 100 * (weak - bench) / bench."""
    if bench == 0:
        raise ZeroDivisionError("benchmark price is zero")
    return 100.0 * (weak - bench) / bench


def make_report_row(strike: float, m: int, n: int, gamma: float, weak: float, bench: float, bench_se: float) -> ErrorReportRow:
    """Assemble an ErrorReportRow with its derived error fields."""
    return ErrorReportRow(
        strike=float(strike),
        m=m,
        n=n,
        gamma=float(gamma),
        weak_price=float(weak),
        benchmark_price=float(bench),
        benchmark_se=float(bench_se),
        error_rate_pct=error_rate(weak, bench),
        abs_error=abs(weak - bench),
    )


def predict_error_next_n(err_mn: float, m: int, n: int) -> float:
    """Forecast the error after one more time step: err * (n/(n+1))^(m/2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return err_mn * (n / (n + 1.0)) ** (m / 2.0)


def predict_error_next_m(err_mn: float, epsilon: float, n: int) -> float:
    """Forecast the error at the next expansion order: err * epsilon / sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return err_mn * epsilon / np.sqrt(n)


def convergence_slope(errors) -> float:
    """Least-squares slope of log(error) against log(n).

    Args:
        errors: iterable of (n, abs_error) pairs, at least 3, errors > 0.
    """
    pts = [(float(n), float(e)) for n, e in errors]
    if len(pts) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    if any(e <= 0 for _, e in pts):
        raise ValueError("errors must be positive for a log-log fit")
    ln = np.log([n for n, _ in pts])
    le = np.log([e for _, e in pts])
    return float(np.polyfit(ln, le, 1)[0])


def gamma_sse_profile(
    model,
    strikes,
    m: int,
    n: int,
    gamma_grid=DEFAULT_GAMMA_GRID,
    T: float = 1.0,
    payoff_kind: str = "call",
    bench: dict | None = None,
    bench_paths: int = 10**6,
    bench_steps: int = 500,
    stream: int = 0,
    spatial_grid: int = 801,
) -> dict:
    """Sum of squared absolute errors across strikes, per grid exponent gamma.

    Args:
        model: local-volatility model (LocalVolCev or built VectorFieldSet).
        strikes: strike grid for the objective.
        m, n: scheme configuration.
        gamma_grid: candidate exponents.
        T: maturity.
        payoff_kind: "call" or "put".
        bench: optional dict strike -> (price, se); computed by the
            Euler-Maruyama benchmark when omitted.
        bench_paths, bench_steps, stream: benchmark settings when computed here.
        spatial_grid: chain induction grid size.

    Returns:
        dict gamma -> SSE.
    """
    if not gamma_grid:
        raise ValueError("gamma grid must be nonempty")
    params = model.params if hasattr(model, "params") and model.params is not None else model
    if bench is None:
        vfs = build_local_vol(params.s0, params.beta, params.epsilon)
        states = em_terminal_states(vfs, [params.s0], T, bench_steps, bench_paths, stream)
        bench = price_strikes_from_states(states, payoff_kind, strikes)
    profile = {}
    for gamma in gamma_grid:
        sse = 0.0
        for k in strikes:
            est = chain_price_1d(params, PayoffSpec(payoff_kind, float(k)), GridSpec(n, float(gamma), T), m, spatial_grid)
            sse += (est.value - bench[float(k)][0]) ** 2
        profile[float(gamma)] = sse
    return profile


def optimal_gamma(model, strikes, m: int, n: int, gamma_grid=DEFAULT_GAMMA_GRID, **kwargs) -> float:
    """Grid exponent minimizing the across-strike squared error objective.

    Accepts the same keyword settings as gamma_sse_profile.
    """
    profile = gamma_sse_profile(model, strikes, m, n, gamma_grid, **kwargs)
    return min(profile, key=profile.get)
