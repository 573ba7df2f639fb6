"""Monte Carlo coverage experiment for the whitened AMLE-minus-MLE statistic.

For replicate m a fine Euler path with 2^l steps is simulated from noise
stream m. The AMLE on the fine grid stands in for the MLE. For every
subsample level k the AMLE, the discretised covariance and the Hessian are
evaluated on the subsampled path, and the statistic is compared with a
chi-square quantile.

Config files are flat ``key = value`` lines with ``#`` comments; lists are
comma separated.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import mixed_normal_statistic, sigma_n
from .errors import DomainError, InputError, NumericalError, ParseError
from .estimate import amle_linear, amle_newton, mle_proxy
from .heston import HestonParams
from .likelihood import PathContext, hess_loglik_n
from .models import DEFAULTS, build_model
from .numerics import NoiseSource, chi2_quantile
from .simulate import Path, TimeGrid, euler_simulate_many, subsample

log = logging.getLogger(__name__)

FAILURE_WARN_FRACTION = 0.05

_INT_KEYS = {"l", "M", "master_seed", "batch_size", "workers"}
_FLOAT_KEYS = {"T", "p_tail"}
_KNOWN = _INT_KEYS | _FLOAT_KEYS | {"model", "k_list", "df_mode", "output", "theta", "initial_state", "include_fine_row"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "heston"
    model_params: dict = field(default_factory=dict)
    theta: tuple | None = None
    initial_state: tuple | None = None
    T: float = 1.0
    l: int = 12
    k_list: tuple = (3, 4, 5, 6, 7, 8)
    p_tail: float = 0.05
    M: int = 1000
    master_seed: int = 0
    df_mode: str = "auto-rank"
    output: str | None = None
    include_fine_row: bool = False
    batch_size: int | None = None
    workers: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise InputError("T must be positive")
        if self.l < 1:
            raise InputError("l must be at least 1")
        if not self.k_list:
            raise InputError("k_list must not be empty")
        for k in self.k_list:
            if not 1 <= k <= self.l:
                raise InputError(f"subsample level {k} outside [1, l={self.l}]")
        if self.M < 1:
            raise InputError("M must be at least 1")
        if not 0.0 < self.p_tail < 1.0:
            raise InputError("p_tail must lie in (0, 1)")
        self.fixed_df  # validates df_mode
        NoiseSource(self.master_seed, 0)

    @property
    def fixed_df(self) -> int | None:
        if self.df_mode == "auto-rank":
            return None
        if self.df_mode.startswith("fixed:"):
            try:
                r = int(self.df_mode[len("fixed:"):])
            except ValueError:
                r = 0
            if r >= 1:
                return r
        raise InputError(f"df_mode must be 'auto-rank' or 'fixed:<r>', got {self.df_mode!r}")

    @property
    def levels(self) -> tuple:
        ks = tuple(self.k_list)
        if self.include_fine_row and self.l not in ks:
            ks = ks + (self.l,)
        return ks

    def resolved_theta(self) -> np.ndarray:
        if self.theta is not None:
            return np.asarray(self.theta, dtype=float)
        if self.model == "heston":
            return _heston_params(self).theta
        return np.asarray(DEFAULTS.get(self.model, {}).get("theta"), dtype=float)

    def resolved_initial_state(self) -> np.ndarray:
        if self.initial_state is not None:
            return np.asarray(self.initial_state, dtype=float)
        if self.model == "heston":
            return _heston_params(self).initial_state
        return np.asarray(DEFAULTS.get(self.model, {}).get("x0"), dtype=float)

    def build_model(self):
        return build_model(self.model, self.model_params)


def _heston_params(cfg) -> HestonParams:
    fields = HestonParams.__dataclass_fields__
    kw = {k: float(v) for k, v in cfg.model_params.items() if k in fields}
    kw["T"] = cfg.T
    return HestonParams(**kw)


def _parse_list(text, conv, lineno):
    try:
        return tuple(conv(p.strip()) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ParseError(f"bad list value ({exc})", line=lineno) from None


def parse_config(text: str) -> ExperimentConfig:
    kw: dict = {}
    params: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=lineno)
        try:
            if key in _INT_KEYS:
                kw[key] = int(value)
            elif key in _FLOAT_KEYS:
                kw[key] = float(value)
            elif key == "k_list":
                kw[key] = _parse_list(value, int, lineno)
            elif key in ("theta", "initial_state"):
                kw[key] = _parse_list(value, float, lineno)
            elif key == "include_fine_row":
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(f"not a boolean: {value!r}")
                kw[key] = value.lower() in ("true", "1", "yes")
            elif key in _KNOWN:
                kw[key] = value
            else:
                params[key] = float(value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r} ({exc})", line=lineno) from None
    kw["model_params"] = params
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


@dataclass
class ReplicateResults:
    """Per-replicate outcomes; NaN statistic marks a failure at that level."""

    levels: tuple
    statistics: np.ndarray
    ranks: np.ndarray
    theta_hat: np.ndarray
    theta_bar: np.ndarray
    dts: np.ndarray
    failure_reasons: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CoverageRow:
    k: int
    n: int
    coverage: float
    used: int
    failures: int


@dataclass
class CoverageTable:
    rows: list
    p_tail: float
    M: int
    warnings: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [f"# warning: {w}" for w in self.warnings]
        lines.append("k,n,coverage,used,failures")
        for r in self.rows:
            cov = "nan" if math.isnan(r.coverage) else f"{r.coverage:.4f}"
            lines.append(f"{r.k},{r.n},{cov},{r.used},{r.failures}")
        return "\n".join(lines) + "\n"

    @property
    def coverages(self) -> np.ndarray:
        return np.array([r.coverage for r in self.rows])


def _amle(model, path, ctx):
    if model.drift_affine:
        return amle_linear(model, path, ctx)
    return amle_newton(model, path, ctx=ctx)


def _replicate(model, fine: Path, levels):
    """Statistics for one fine path at each level; failures become NaN."""
    K, d = len(levels), model.d
    stats = np.full(K, np.nan)
    ranks = np.zeros(K, dtype=int)
    bars = np.full((K, d), np.nan)
    reasons = {}
    try:
        theta_hat = mle_proxy(model, fine).theta_hat
    except (NumericalError, DomainError) as exc:
        return stats, ranks, np.full(d, np.nan), bars, {lv: type(exc).__name__ for lv in levels}
    for i, lv in enumerate(levels):
        try:
            sub = subsample(fine, lv)
            ctx = PathContext(model, sub)
            theta_bar = _amle(model, sub, ctx).theta_hat
            bars[i] = theta_bar
            rep = mixed_normal_statistic(
                sigma_n(model, sub, theta_bar, ctx),
                hess_loglik_n(model, sub, theta_bar, ctx),
                theta_bar,
                theta_hat,
                sub.grid.dt,
            )
            if rep.rank == 0 or not math.isfinite(rep.statistic):
                raise NumericalError("degenerate covariance")
            stats[i], ranks[i] = rep.statistic, rep.rank
        except (NumericalError, DomainError) as exc:
            reasons[lv] = type(exc).__name__
    return stats, ranks, theta_hat, bars, reasons


def _run_batch(args):
    config, start, stop = args
    model = config.build_model()
    grid = TimeGrid(config.T, 1 << config.l)
    levels = config.levels
    noises = [NoiseSource(config.master_seed, m) for m in range(start, stop)]
    out = []
    try:
        states = euler_simulate_many(model, config.resolved_theta(), config.resolved_initial_state(), grid, noises)
    except NumericalError:
        # rerun one by one so a single diverging stream only fails itself
        states = []
        for noise in noises:
            try:
                states.append(euler_simulate_many(model, config.resolved_theta(), config.resolved_initial_state(), grid, [noise])[0])
            except NumericalError:
                states.append(None)
    for m, st in zip(range(start, stop), states):
        if st is None:
            K = len(levels)
            out.append((m, np.full(K, np.nan), np.zeros(K, int), np.full(model.d, np.nan),
                        np.full((K, model.d), np.nan), {lv: "SimulationDivergedError" for lv in levels}))
            continue
        out.append((m,) + _replicate(model, Path(grid, st), levels))
    return out


def default_batch_size(l: int) -> int:
    return max(1, (1 << 23) >> l)


def run_replicates(config: ExperimentConfig) -> ReplicateResults:
    """Simulate and evaluate all replicates; order-independent in the result."""
    model = config.build_model()
    theta = config.resolved_theta()
    if theta.size != model.d or config.resolved_initial_state().size != model.k:
        raise InputError("theta or initial_state has the wrong dimension for the model")
    levels = config.levels
    K, M, d = len(levels), config.M, model.d
    bs = config.batch_size or default_batch_size(config.l)
    jobs = [(config, s, min(M, s + bs)) for s in range(0, M, bs)]

    res = ReplicateResults(
        levels,
        np.full((M, K), np.nan),
        np.zeros((M, K), dtype=int),
        np.full((M, d), np.nan),
        np.full((M, K, d), np.nan),
        np.array([config.T / (1 << lv) for lv in levels]),
    )
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            batches = list(pool.map(_run_batch, jobs))
    else:
        batches = []
        for job in jobs:
            batches.append(_run_batch(job))
            log.info("replicates %d-%d done", job[1], job[2] - 1)
    for batch in batches:
        for m, stats, ranks, hat, bars, reasons in batch:
            res.statistics[m] = stats
            res.ranks[m] = ranks
            res.theta_hat[m] = hat
            res.theta_bar[m] = bars
            if reasons:
                res.failure_reasons[m] = reasons
    return res


def coverage_table(results: ReplicateResults, config: ExperimentConfig) -> CoverageTable:
    fixed = config.fixed_df
    rows, warnings = [], []
    quantiles = {}
    for i, lv in enumerate(results.levels):
        stats = results.statistics[:, i]
        ok = ~np.isnan(stats)
        used = int(ok.sum())
        failures = config.M - used
        if used:
            dfs = np.full(used, fixed) if fixed else results.ranks[ok, i]
            bounds = np.array([quantiles.setdefault(int(r), chi2_quantile(config.p_tail, int(r))) for r in dfs])
            cov = float(np.mean(stats[ok] <= bounds))
        else:
            cov = float("nan")
        if failures > FAILURE_WARN_FRACTION * config.M:
            warnings.append(f"k={lv}: {failures} of {config.M} replicates failed")
        rows.append(CoverageRow(lv, 1 << lv, cov, used, failures))
    return CoverageTable(rows, config.p_tail, config.M, warnings)


def run_coverage_experiment(config: ExperimentConfig, return_results: bool = False):
    results = run_replicates(config)
    table = coverage_table(results, config)
    for w in table.warnings:
        log.warning(w)
    if return_results:
        return table, results
    return table
