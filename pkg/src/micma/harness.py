"""Trial execution, batch aggregation, the margin-parameter grid, and CSV output."""

from __future__ import annotations

import csv
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import benchmarks
from .cmaes import CMA, default_params
from .errors import ConfigError, MicmaError
from .int_mutation import CMAIM, default_box
from .margin import CMAWithMargin
from .numerics import Rng

log = logging.getLogger(__name__)

METHODS = ("cmaes", "cmaes-im", "cmaes-im-box", "margin")
TABLE_METHODS = ("cmaes-im", "cmaes-im-box", "margin")
DEFAULT_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class TrialConfig:
    function: str
    dim: int
    method: str = "margin"
    alpha: Union[float, str] = "auto"
    seed: int = 0
    target: float = 1e-10
    min_eig_stop: float = 1e-30
    max_cond: float = 1e14
    max_evals: int = 1_000_000
    log_trajectory: bool = False

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        benchmarks.make(self.function, self.dim)
        if self.target <= 0 or self.min_eig_stop <= 0 or self.max_cond <= 0:
            raise ConfigError("termination thresholds must be positive")
        if self.max_evals < 0:
            raise ConfigError("evaluation budget must be non-negative")
        if self.alpha != "auto" and not isinstance(self.alpha, (int, float)):
            raise ConfigError(f"alpha must be a number or 'auto', got {self.alpha!r}")


@dataclass
class TrialResult:
    success: bool
    evaluations: int
    best_f: float
    reason: str
    iterations: int = 0
    best_x: Optional[np.ndarray] = None
    final_mean: Optional[np.ndarray] = None
    final_std: Optional[np.ndarray] = None
    trajectory: Optional[List[list]] = None
    columns: Optional[List[str]] = None

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "evaluations": self.evaluations,
            "best_f": self.best_f,
            "reason": self.reason,
            "iterations": self.iterations,
        }


def init_mean(bench: benchmarks.Benchmark, rng: Rng) -> np.ndarray:
    """Initial mean: U[1, 3] on continuous and integer dims, the threshold on binary dims."""
    m = rng.uniform(1.0, 3.0, bench.dim)
    space = bench.space
    for j in space.binary_idx:
        m[j] = space.thresholds(j)[0]
    return m


def make_optimizer(config: TrialConfig, rng: Rng):
    """Build the optimizer for ``config``; draws the initial mean from ``rng`` first."""
    bench = benchmarks.make(config.function, config.dim)
    space = bench.space
    mean = init_mean(bench, rng)
    if config.method == "cmaes":
        return CMA(space, mean, rng)
    if config.method == "margin":
        return CMAWithMargin(space, mean, rng, alpha=config.alpha)
    opt = CMAIM(space, mean, rng, box=default_box(space) if config.method == "cmaes-im-box" else None)
    opt.name = config.method
    return opt


def trajectory_columns(n: int, with_a: bool) -> List[str]:
    cols = ["t", "evals", "best_f", "sigma"]
    cols += [f"m_{j}" for j in range(1, n + 1)]
    cols += [f"std_{j}" for j in range(1, n + 1)]
    if with_a:
        cols += [f"A_{j}" for j in range(1, n + 1)]
    return cols


def run_trial(config: TrialConfig) -> TrialResult:
    """Run one optimization until success, collapse, ill-conditioning, budget, or failure."""
    config.validate()
    rng = Rng(config.seed)
    bench = benchmarks.make(config.function, config.dim)
    try:
        opt = make_optimizer(config, rng)
    except MicmaError as exc:
        log.warning("configuration failure: %s", exc)
        return TrialResult(False, 0, math.inf, "config")

    lam = opt.population_size
    with_a = config.method == "margin"
    rows: Optional[List[list]] = [] if config.log_trajectory else None
    evals, t = 0, 0
    best_f, best_x = math.inf, None
    reason = "budget"

    while True:
        if evals + lam > config.max_evals:
            reason = "budget"
            break
        try:
            rec = opt.ask()
            f = np.asarray(bench(rec.v_bar), dtype=float)
            evals += lam
            k = int(np.argmin(f))
            if f[k] < best_f:
                best_f, best_x = float(f[k]), rec.v_bar[k].copy()
            if best_f < config.target:
                reason = "target"
            else:
                opt.tell(rec, f)
                t += 1
        except MicmaError as exc:
            log.debug("numerical failure at t=%d: %s", t, exc)
            reason = "numerical"
            break

        if rows is not None:
            st = opt.state
            row = [t, evals, best_f, st.sigma, *st.mean, *st.coordinate_std]
            if with_a:
                row += list(opt.trajectory_extra()["A"])
            rows.append(row)
        if reason == "target":
            break

        st = opt.state
        eig = st.eigen
        if st.sigma**2 * eig.min_eig < config.min_eig_stop:
            reason = "eig-collapse"
            break
        if eig.condition > config.max_cond:
            reason = "condition"
            break

    return TrialResult(
        success=reason == "target",
        evaluations=evals,
        best_f=best_f,
        reason=reason,
        iterations=t,
        best_x=best_x,
        final_mean=opt.state.mean.copy(),
        final_std=opt.state.coordinate_std,
        trajectory=rows,
        columns=trajectory_columns(config.dim, with_a) if rows is not None else None,
    )


def median_iqr(values: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """Median and IQR; quartiles are medians of the lower and upper halves.

    For an odd count the middle value belongs to neither half.
    """
    v = sorted(values)
    n = len(v)
    if n == 0:
        return None, None
    med = statistics.median(v)
    if n == 1:
        return med, 0.0
    half = n // 2
    lower, upper = v[:half], v[n - half:]
    return med, statistics.median(upper) - statistics.median(lower)


@dataclass
class SummaryRow:
    function: str
    dim: int
    method: str
    trials: int
    successes: int
    median_evals: Optional[float]
    iqr_evals: Optional[float]
    results: List[TrialResult] = field(default_factory=list, repr=False)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def _seeded(config: TrialConfig, trials: int, seed_base: int) -> List[TrialConfig]:
    return [replace(config, seed=seed_base + k) for k in range(trials)]


def run_many(configs: Sequence[TrialConfig], jobs: int = 1) -> List[TrialResult]:
    """Run trials in order; with ``jobs > 1`` they go to a process pool."""
    if jobs <= 1 or len(configs) <= 1:
        return [run_trial(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_trial, configs, chunksize=1))


def summarize(config: TrialConfig, results: Sequence[TrialResult]) -> SummaryRow:
    ok = [r.evaluations for r in results if r.success]
    med, iqr = median_iqr(ok)
    return SummaryRow(config.function, config.dim, config.method, len(results), len(ok), med, iqr, list(results))


def run_batch(
    configs: Iterable[TrialConfig], trials: int, jobs: int = 1, seed_base: int = 0
) -> List[SummaryRow]:
    """Run ``trials`` seeded trials per config; trial k uses seed ``seed_base + k``."""
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    configs = list(configs)
    flat = [c for cfg in configs for c in _seeded(cfg, trials, seed_base)]
    results = run_many(flat, jobs)
    return [summarize(cfg, results[i * trials:(i + 1) * trials]) for i, cfg in enumerate(configs)]


@dataclass
class GridCell:
    function: str
    dim: int
    m: float
    n: float
    alpha: float
    success_rate: Optional[float]
    median_evals: Optional[float]


def grid_alpha(dim: int, lam: int, m: float, n: float) -> float:
    return dim ** (-m) * lam ** (-n)


def alpha_grid(
    function: str,
    dims: Sequence[int],
    m_grid: Sequence[float] = DEFAULT_GRID,
    n_grid: Sequence[float] = DEFAULT_GRID,
    trials: int = 100,
    jobs: int = 1,
    seed_base: int = 0,
) -> List[GridCell]:
    """Success rate and median evaluations of the margin method over alpha = N^-m lambda^-n.

    The (0, 0) cell, i.e. alpha = 1, is skipped. Cells whose alpha is not
    below 0.5 are reported with no success rate.
    """
    cells: List[GridCell] = []
    for dim in dims:
        lam = default_params(dim).lam
        for m in m_grid:
            for n in n_grid:
                if m == 0 and n == 0:
                    continue
                alpha = grid_alpha(dim, lam, m, n)
                if alpha >= 0.5:
                    log.warning("alpha=%g is not a valid margin; cell (%g, %g) skipped", alpha, m, n)
                    cells.append(GridCell(function, dim, m, n, alpha, None, None))
                    continue
                cfg = TrialConfig(function, dim, "margin", alpha=alpha)
                row = run_batch([cfg], trials, jobs, seed_base)[0]
                cells.append(GridCell(function, dim, m, n, alpha, row.success_rate, row.median_evals))
    return cells


SUMMARY_COLUMNS = ["function", "N", "method", "trials", "successes", "median_evals", "iqr_evals"]
GRID_COLUMNS = ["function", "N", "m", "n", "alpha", "success_rate", "median_evals"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_summary_csv(path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow([r.function, r.dim, r.method, r.trials, r.successes,
                        _fmt(r.median_evals), _fmt(r.iqr_evals)])


def write_grid_csv(path, cells: Sequence[GridCell]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GRID_COLUMNS)
        for c in cells:
            w.writerow([c.function, c.dim, c.m, c.n, repr(c.alpha),
                        _fmt(c.success_rate), _fmt(c.median_evals)])


def write_trajectory_csv(path, result: TrialResult) -> None:
    if result.trajectory is None:
        raise ValueError("trial was run without trajectory logging")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(result.columns)
        for row in result.trajectory:
            w.writerow([_fmt(x) for x in row])
