"""Command-line entry point: config parsing, experiment orchestration, CSV output.

Subcommands:
    price        price a (model, payoff, method) matrix, one CSV row per cell
    figure       emit the data series of a named result figure (F1..F8)
    bench        Euler-Maruyama benchmark prices over a strike grid
    sweep-gamma  per-strike chain errors and aggregate SSE across grid exponents
    convergence  chain values against a converged reference over a step ladder

All output is CSV with the fixed header
``model,payoff,strike,method,m,n,gamma,price,std_err,paths,seed,runtime_ms``;
plotting is left to external tools.  Each run writes ``<out>.log`` with the
fully resolved configuration and master seed, so any output can be reproduced
from its log.  Exit codes: 0 ok, 1 runtime failure, 2 configuration error.
The ``AEW_THREADS`` environment variable caps the worker pool; results are
unaffected by its value.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analysis import (
    DEFAULT_GAMMA_GRID,
    GAMMA_COARSE,
    convergence_slope,
    error_rate,
    predict_error_next_m,
    predict_error_next_n,
)
from .chain import (
    DEFAULT_SPATIAL_GRID,
    GridSpec,
    chain_price_1d,
    chain_price_mc,
    chain_price_sabr_n2,
)
from .benchmark import em_terminal_states, price_strikes_from_states
from .models import LocalVolCev, LogNormalSabr, PayoffSpec, build_local_vol, build_sabr
from .pricer import DEFAULT_NODES, q_step_sabr

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

CSV_HEADER = ("model", "payoff", "strike", "method", "m", "n", "gamma", "price", "std_err", "paths", "seed", "runtime_ms")
DEFAULT_STRIKES = tuple(float(k) for k in range(50, 201, 10))

# Figure registry: model family and maturity are part of the figure's identity.
FIGURE_FAMILY = {"F1": "local_vol", "F2": "local_vol", "F3": "sabr", "F4": "sabr",
                 "F5": "local_vol", "F6": "local_vol", "F7": "local_vol", "F8": "local_vol"}
FIGURE_MATURITY = {"F1": 1.0, "F2": 10.0, "F3": 1.0, "F4": 2.0,
                   "F5": 1.0, "F6": 1.0, "F7": 1.0, "F8": 1.0}


class ConfigError(ValueError):
    """Configuration problem; reported with the offending field and exit code 2."""


def worker_count() -> int:
    """Worker pool size; AEW_THREADS caps it, results never depend on it."""
    cap = os.environ.get("AEW_THREADS")
    default = min(os.cpu_count() or 1, 8)
    if cap is None:
        return default
    try:
        value = int(cap)
    except ValueError:
        raise ConfigError(f"AEW_THREADS must be an integer, got {cap!r}")
    if value < 1:
        raise ConfigError("AEW_THREADS must be >= 1")
    return value


def _pmap(fn, items):
    """Map preserving item order; parallel over the worker pool."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}")


def _section(cfg: dict, name: str) -> dict:
    section = cfg.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    return section


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required field [{where}].{key}")
    return section[key]


def _number(section: dict, key: str, where: str, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required field [{where}].{key}")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{where}].{key} must be a number, got {value!r}")
    return value


def _int_list(section: dict, key: str, where: str, default):
    value = section.get(key, default)
    if isinstance(value, bool):
        raise ConfigError(f"[{where}].{key} must be an integer or list of integers")
    if isinstance(value, int):
        return [value]
    if isinstance(value, list) and value and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        return list(value)
    raise ConfigError(f"[{where}].{key} must be an integer or nonempty list of integers")


def _float_list(section: dict, key: str, where: str, default):
    value = section.get(key, default)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, list) and value and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return [float(v) for v in value]
    raise ConfigError(f"[{where}].{key} must be a number or nonempty list of numbers")


class ResolvedConfig:
    """Validated configuration with every default filled in."""

    def __init__(self, cfg: dict, seed_override=None):
        model = _section(cfg, "model")
        payoff = _section(cfg, "payoff")
        method = _section(cfg, "method")
        grid = _section(cfg, "grid")
        mc = _section(cfg, "mc")

        self.kind = _require(model, "kind", "model")
        if self.kind == "local_vol":
            s0 = float(_number(model, "s0", "model", required=True))
            beta = float(_number(model, "beta", "model", required=True))
            epsilon = float(_number(model, "epsilon", "model", required=True))
            try:
                self.params = LocalVolCev(s0, beta, epsilon)
            except ValueError as exc:
                raise ConfigError(f"[model]: {exc}")
            self.vfs = build_local_vol(s0, beta, epsilon)
            self.underlying_map = "level"
        elif self.kind == "sabr":
            z = float(_number(model, "z", "model", required=True))
            sigma0 = float(_number(model, "sigma0", "model", required=True))
            nu = float(_number(model, "nu", "model", required=True))
            rho = float(_number(model, "rho", "model", required=True))
            try:
                self.params = LogNormalSabr(z, sigma0, nu, rho)
            except ValueError as exc:
                raise ConfigError(f"[model]: {exc}")
            self.vfs = build_sabr(z, sigma0, nu, rho)
            self.underlying_map = "exp_first"
        else:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected 'local_vol' or 'sabr'")

        self.payoff_kind = payoff.get("kind", "call")
        if self.payoff_kind not in ("call", "put", "identity"):
            raise ConfigError(f"[payoff].kind must be call, put or identity, got {self.payoff_kind!r}")
        if "strikes" in payoff:
            self.strikes = _float_list(payoff, "strikes", "payoff", None)
        elif "strike" in payoff:
            self.strikes = [float(_number(payoff, "strike", "payoff"))]
        else:
            self.strikes = list(DEFAULT_STRIKES)

        default_mode = "chain_grid" if self.kind == "local_vol" else "sabr_n2"
        self.mode = method.get("mode", default_mode)
        self.ms = _int_list(method, "m", "method", [1])
        self.ns = _int_list(method, "n", "method", [1])
        self.spatial_grid = int(_number(method, "spatial_grid", "method", DEFAULT_SPATIAL_GRID))
        self.nodes = int(_number(method, "nodes", "method", DEFAULT_NODES))

        self.T = float(_number(grid, "T", "grid", required=True))
        self.gamma = float(_number(grid, "gamma", "grid", 1.0))
        self.gammas = _float_list(grid, "gammas", "grid", list(GAMMA_COARSE))

        self.paths = int(_number(mc, "paths", "mc", 10**6))
        self.steps = int(_number(mc, "steps", "mc", 500))
        self.chain_paths = int(_number(mc, "chain_paths", "mc", 10**5))
        self.paths_per_level = mc.get("paths_per_level")
        if self.paths_per_level is not None:
            self.paths_per_level = _int_list(mc, "paths_per_level", "mc", None)
        seed = _number(mc, "seed", "mc", required=(seed_override is None))
        self.seed = int(seed_override if seed_override is not None else seed)
        if self.seed < 0:
            raise ConfigError("[mc].seed must be a non-negative integer")

    def payoff(self, strike: float) -> PayoffSpec:
        return PayoffSpec(self.payoff_kind, float(strike), self.underlying_map)

    def x0(self):
        if self.kind == "local_vol":
            return [self.params.s0]
        return [self.params.x0, self.params.sigma0]

    def as_dict(self) -> dict:
        out = {
            "model": {"kind": self.kind},
            "payoff": {"kind": self.payoff_kind, "strikes": self.strikes},
            "method": {"mode": self.mode, "m": self.ms, "n": self.ns,
                       "spatial_grid": self.spatial_grid, "nodes": self.nodes},
            "grid": {"T": self.T, "gamma": self.gamma, "gammas": self.gammas},
            "mc": {"paths": self.paths, "steps": self.steps, "chain_paths": self.chain_paths,
                   "seed": self.seed},
        }
        if self.kind == "local_vol":
            out["model"].update(s0=self.params.s0, beta=self.params.beta, epsilon=self.params.epsilon)
        else:
            out["model"].update(z=self.params.z, sigma0=self.params.sigma0,
                                nu=self.params.nu, rho=self.params.rho)
        if self.paths_per_level is not None:
            out["mc"]["paths_per_level"] = self.paths_per_level
        return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row(rc: ResolvedConfig, strike, method: str, m, n, gamma, price, std_err, paths) -> tuple:
    return (rc.kind, rc.payoff_kind, strike, method, m, n, gamma, price, std_err, paths, rc.seed, 0)


def write_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_log(out_path: str, command: str, rc: ResolvedConfig, extra: dict, elapsed_ms: float, n_rows: int) -> None:
    log = {
        "command": command,
        "config": rc.as_dict(),
        "seed": rc.seed,
        "out": out_path,
        "rows": n_rows,
        "elapsed_ms": round(elapsed_ms, 3),
        "workers": worker_count(),
    }
    log.update(extra)
    with open(out_path + ".log", "w") as fh:
        json.dump(log, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _bench_prices(rc: ResolvedConfig, T: float, strikes) -> dict:
    """One benchmark simulation shared by every strike."""
    states = em_terminal_states(rc.vfs, rc.x0(), T, rc.steps, rc.paths, rc.seed)
    return price_strikes_from_states(states, rc.payoff_kind, strikes, rc.underlying_map)


def _chain_value(rc: ResolvedConfig, strike: float, m: int, n: int, gamma: float, T: float):
    est = chain_price_1d(rc.params, rc.payoff(strike), GridSpec(n, gamma, T), m, rc.spatial_grid, rc.nodes)
    return est


# ---------------------------------------------------------------------------
# price

def _price_cell(rc: ResolvedConfig, m: int, n: int, strike: float):
    if rc.mode == "chain_grid":
        est = _chain_value(rc, strike, m, n, rc.gamma, rc.T)
    elif rc.mode == "chain_mc":
        counts = rc.paths_per_level if rc.paths_per_level is not None else [rc.chain_paths] + [64] * (n - 1)
        est = chain_price_mc(rc.params, rc.payoff(strike), GridSpec(n, rc.gamma, rc.T), m, counts, rc.seed)
    elif rc.mode == "sabr_n2":
        if m != 1 or n != 2:
            raise ConfigError("mode 'sabr_n2' requires m = 1 and n = 2")
        est = chain_price_sabr_n2(rc.params, rc.payoff(strike), rc.T, rc.chain_paths, rc.seed)
    elif rc.mode == "sabr_marginal":
        if m != 1 or n != 1:
            raise ConfigError("mode 'sabr_marginal' requires m = 1 and n = 1")
        est = q_step_sabr(rc.params, rc.x0(), rc.T, rc.payoff(strike), "MarginalQuadrature", nodes=rc.nodes)
    else:
        raise ConfigError(f"unknown method mode {rc.mode!r}")
    return _row(rc, strike, rc.mode, m, n, rc.gamma, est.value, est.std_err, est.paths)


def cmd_price(rc: ResolvedConfig):
    if rc.mode in ("chain_grid", "chain_mc") and rc.kind != "local_vol":
        raise ConfigError(f"mode {rc.mode!r} requires a local_vol model")
    if rc.mode in ("sabr_n2", "sabr_marginal") and rc.kind != "sabr":
        raise ConfigError(f"mode {rc.mode!r} requires a sabr model")
    cells = [(m, n, k) for m in rc.ms for n in rc.ns for k in rc.strikes]
    return _pmap(lambda cell: _price_cell(rc, *cell), cells)


# ---------------------------------------------------------------------------
# figures

def _figure_local_vol_rates(rc: ResolvedConfig, T: float):
    """Error-rate series of the analytic expansions and their chain versions."""
    series = [("AE1", 1, 1), ("AE1-WA", 1, 2), ("AE1-WA", 1, 3), ("AE2", 2, 1), ("AE2-WA", 2, 2)]
    bench = _bench_prices(rc, T, rc.strikes)
    cells = [(label, m, n, k) for (label, m, n) in series for k in rc.strikes]

    def cell_row(cell):
        label, m, n, k = cell
        est = _chain_value(rc, k, m, n, 1.0, T)
        b, se = bench[float(k)]
        rate = error_rate(est.value, b)
        rate_se = abs(100.0 * est.value / b**2) * se
        return _row(rc, k, label, m, n, 1.0, rate, rate_se, rc.paths)

    rows = _pmap(cell_row, cells)
    for k in rc.strikes:
        b, se = bench[float(k)]
        rows.append(_row(rc, k, "benchmark", None, rc.steps, None, b, se, rc.paths))
    return rows


def _figure_sabr_rates(rc: ResolvedConfig, T: float):
    """Error rates of the one-step expansion and the two-step chain (SABR)."""
    bench = _bench_prices(rc, T, rc.strikes)

    def one_step(k):
        est = q_step_sabr(rc.params, rc.x0(), T, rc.payoff(k), "MarginalQuadrature", nodes=rc.nodes)
        b, se = bench[float(k)]
        return _row(rc, k, "AE1", 1, 1, 1.0, error_rate(est.value, b), abs(100.0 * est.value / b**2) * se, rc.paths)

    def two_step(k):
        est = chain_price_sabr_n2(rc.params, rc.payoff(k), T, rc.chain_paths, rc.seed)
        b, se = bench[float(k)]
        total_se = abs(100.0 / b) * math.hypot(est.std_err, se * est.value / b)
        return _row(rc, k, "AE1-WA", 1, 2, 1.0, error_rate(est.value, b), total_se, est.paths)

    rows = _pmap(one_step, rc.strikes) + _pmap(two_step, rc.strikes)
    for k in rc.strikes:
        b, se = bench[float(k)]
        rows.append(_row(rc, k, "benchmark", None, rc.steps, None, b, se, rc.paths))
    return rows


def _figure_n_transfer(rc: ResolvedConfig, T: float):
    """Signed errors for m=1, n=2 and n=3, plus the predicted n=3 series."""
    bench = _bench_prices(rc, T, rc.strikes)

    def err(k, n):
        est = _chain_value(rc, k, 1, n, 1.0, T)
        b, se = bench[float(k)]
        return est.value - b, se

    rows = []
    pairs = _pmap(lambda k: (err(k, 2), err(k, 3)), rc.strikes)
    for k, ((e2, se2), (e3, se3)) in zip(rc.strikes, pairs):
        rows.append(_row(rc, k, "err-WA", 1, 2, 1.0, e2, se2, rc.paths))
        rows.append(_row(rc, k, "err-WA", 1, 3, 1.0, e3, se3, rc.paths))
        rows.append(_row(rc, k, "err-WA-pred", 1, 3, 1.0, predict_error_next_n(e2, 1, 2), se2 * math.sqrt(2.0 / 3.0), rc.paths))
    return rows


def _figure_m_transfer(rc: ResolvedConfig, T: float):
    """Signed errors for (m=1,n=2) and (m=2,n=2), plus the predicted m=2 series."""
    bench = _bench_prices(rc, T, rc.strikes)
    eps = rc.params.epsilon

    def err(k, m):
        est = _chain_value(rc, k, m, 2, 1.0, T)
        b, se = bench[float(k)]
        return est.value - b, se

    rows = []
    pairs = _pmap(lambda k: (err(k, 1), err(k, 2)), rc.strikes)
    for k, ((e1, se1), (e2, se2)) in zip(rc.strikes, pairs):
        rows.append(_row(rc, k, "err-WA", 1, 2, 1.0, e1, se1, rc.paths))
        rows.append(_row(rc, k, "err-WA", 2, 2, 1.0, e2, se2, rc.paths))
        rows.append(_row(rc, k, "err-WA-pred", 2, 2, 1.0, predict_error_next_m(e1, eps, 2), abs(se1 * eps / math.sqrt(2.0)), rc.paths))
    return rows


def _figure_gamma(rc: ResolvedConfig, T: float, n: int):
    """Signed chain errors per strike for each grid exponent gamma."""
    bench = _bench_prices(rc, T, rc.strikes)
    cells = [(g, k) for g in rc.gammas for k in rc.strikes]

    def cell_row(cell):
        g, k = cell
        est = _chain_value(rc, k, 1, n, g, T)
        b, se = bench[float(k)]
        return _row(rc, k, "err-WA", 1, n, g, est.value - b, se, rc.paths)

    return _pmap(cell_row, cells)


def cmd_figure(rc: ResolvedConfig, figure_id: str):
    if figure_id not in FIGURE_FAMILY:
        raise ConfigError(f"unknown figure id {figure_id!r}; expected F1..F8")
    family = FIGURE_FAMILY[figure_id]
    if rc.kind != family:
        raise ConfigError(f"figure {figure_id} needs a {family} model, config has {rc.kind}")
    T = FIGURE_MATURITY[figure_id]
    if figure_id in ("F1", "F2"):
        return _figure_local_vol_rates(rc, T)
    if figure_id in ("F3", "F4"):
        return _figure_sabr_rates(rc, T)
    if figure_id == "F5":
        return _figure_n_transfer(rc, T)
    if figure_id == "F6":
        return _figure_m_transfer(rc, T)
    return _figure_gamma(rc, T, 2 if figure_id == "F7" else 3)


# ---------------------------------------------------------------------------
# bench / sweep-gamma / convergence

def cmd_bench(rc: ResolvedConfig):
    bench = _bench_prices(rc, rc.T, rc.strikes)
    return [_row(rc, k, "em", None, rc.steps, None, bench[float(k)][0], bench[float(k)][1], rc.paths)
            for k in rc.strikes]


def cmd_sweep_gamma(rc: ResolvedConfig):
    if rc.kind != "local_vol":
        raise ConfigError("sweep-gamma requires a local_vol model")
    m, n = rc.ms[0], rc.ns[0]
    bench = _bench_prices(rc, rc.T, rc.strikes)
    cells = [(g, k) for g in rc.gammas for k in rc.strikes]

    def cell_row(cell):
        g, k = cell
        est = _chain_value(rc, k, m, n, g, rc.T)
        b, se = bench[float(k)]
        return _row(rc, k, "err-WA", m, n, g, est.value - b, se, rc.paths)

    rows = _pmap(cell_row, cells)
    sse = {}
    for row in rows:
        sse[row[6]] = sse.get(row[6], 0.0) + row[7] ** 2
    for g in rc.gammas:
        rows.append(_row(rc, None, "gamma-sse", m, n, g, sse[g], None, rc.paths))
    best = min(rc.gammas, key=lambda g: sse[g])
    rows.append(_row(rc, None, "gamma-opt", m, n, best, sse[best], None, rc.paths))
    return rows


def cmd_convergence(rc: ResolvedConfig):
    if rc.kind != "local_vol":
        raise ConfigError("convergence requires a local_vol model")
    m = rc.ms[0]
    ns = rc.ns if rc.ns != [1] else [1, 2, 4, 8]
    n_ref = max(64, 4 * max(ns))
    strike = rc.strikes[0]

    values = _pmap(lambda n: _chain_value(rc, strike, m, n, rc.gamma, rc.T).value, ns)
    reference = _chain_value(rc, strike, m, n_ref, rc.gamma, rc.T).value
    rows = [_row(rc, strike, "chain_grid", m, n, rc.gamma, v, 0.0, 0) for n, v in zip(ns, values)]
    rows.append(_row(rc, strike, "reference", m, n_ref, rc.gamma, reference, 0.0, 0))
    errors = [abs(v - reference) for v in values]
    if all(e > 0 for e in errors) and len(errors) >= 3:
        slope = convergence_slope(list(zip(ns, errors)))
        rows.append(_row(rc, strike, "slope", m, None, rc.gamma, slope, None, 0))
    return rows


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aew",
        description="Asymptotic-expansion pricing engine: weighted one-step operators, "
                    "operator chains, and Euler-Maruyama benchmarks, emitted as CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("price", "price the configured (model, payoff, method) matrix"),
        ("figure", "emit the data series of a named result figure"),
        ("bench", "Euler-Maruyama benchmark prices over the strike grid"),
        ("sweep-gamma", "chain errors and SSE across grid exponents"),
        ("convergence", "chain values against a converged reference over a step ladder"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="master seed override (u64)")
        if name == "figure":
            p.add_argument("--id", required=True, dest="figure_id",
                           choices=sorted(FIGURE_FAMILY), help="figure identifier")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        rc = ResolvedConfig(load_config(args.config), seed_override=args.seed)
        extra = {}
        if args.command == "price":
            rows = cmd_price(rc)
        elif args.command == "figure":
            rows = cmd_figure(rc, args.figure_id)
            extra = {"figure": args.figure_id, "maturity": FIGURE_MATURITY[args.figure_id]}
        elif args.command == "bench":
            rows = cmd_bench(rc)
        elif args.command == "sweep-gamma":
            rows = cmd_sweep_gamma(rc)
        else:
            rows = cmd_convergence(rc)
        write_csv(args.out, rows)
        write_log(args.out, args.command, rc, extra, 1000.0 * (time.perf_counter() - started), len(rows))
    except ConfigError as exc:
        print(f"aew: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pricing or IO failure
        print(f"aew: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
