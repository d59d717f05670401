"""Simulation lab: data generation, replicated sweeps, aggregation.

Two models are built in:

* ``spline1d`` — ``y = c * 0.6 sin(1.5 pi x) + eps`` with ``x ~ Unif[0,1]``;
* ``additive2d`` — ``y = c * (0.4 sin(1.5 pi x1) + 0.1 (0.5 - x2)^3) + eps``;

both with standard normal noise. A sweep runs a grid of ``(N, rho)`` cells
with ``s = round(N^rho)`` machines, replicated over seeds; each replication
reports the grid MSE of the averaged estimate and the outcome of the
Wald-type test. Replication ``r`` uses seed ``base_seed + r`` on a
counter-based generator, so results are independent of execution order and
worker count.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from dckrr import dnc, rates
from dckrr.inference import estimate_sigma2, test_statistic
from dckrr.solver import krr_fit  # noqa: F401  (re-exported for pipelines)
from dckrr.spectra import (
    Spectrum,
    additive,
    periodic_sobolev,
    truncation_level,
)

__all__ = [
    "MODELS",
    "SweepConfig",
    "CellResult",
    "ExperimentResult",
    "SweepError",
    "signal",
    "generate",
    "mse_of_estimate",
    "run_sweep",
]

MODELS = ("spline1d", "additive2d")

DEFAULT_GRID_1D = 512
DEFAULT_GRID_2D = 64


class SweepError(RuntimeError):
    """Raised when more than 10% of a cell's replications fail."""


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of one replicated experiment grid."""

    model: str = "spline1d"
    c: float = 1.0
    N_list: tuple[int, ...] = (1024,)
    rho_list: tuple[float, ...] = (0.3,)
    replications: int = 50
    alpha: float = 0.05
    lambda_source: str = "rates"  # or "explicit"
    lambda_task: str = "testing"
    lambda_value: float | None = None
    sigma2_mode: str = "known"  # or "plugin"
    sigma2_value: float = 1.0
    base_seed: int = 0
    solve_path: str = "truncated_feature"
    workers: int = 1
    m: int = 2
    grid_size: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(N < 4 for N in self.N_list):
            raise ValueError("N values must be >= 4")
        if any(not 0.0 < r < 1.0 for r in self.rho_list):
            raise ValueError("rho values must lie in (0, 1)")
        if self.lambda_source not in ("rates", "explicit"):
            raise ValueError("lambda_source must be 'rates' or 'explicit'")
        if self.lambda_source == "explicit" and (
            self.lambda_value is None or self.lambda_value <= 0
        ):
            raise ValueError("explicit lambda_source requires a positive lambda_value")
        if self.sigma2_mode not in ("known", "plugin"):
            raise ValueError("sigma2_mode must be 'known' or 'plugin'")

    @property
    def d(self) -> int:
        return 1 if self.model == "spline1d" else 2

    @property
    def family(self) -> str:
        return "spline" if self.model == "spline1d" else "additive"


@dataclass(frozen=True)
class CellResult:
    """Aggregates for one (N, rho) grid cell."""

    N: int
    rho: float
    s: int
    n: int
    lam: float
    mse_mean: float
    mse_stderr: float
    reject_rate: float
    reject_stderr: float
    reps: int
    dropped: int
    failures: int
    wall_time: float


@dataclass(frozen=True)
class ExperimentResult:
    config: SweepConfig
    cells: tuple[CellResult, ...] = field(default_factory=tuple)


def signal(model: str, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """The unit-amplitude true signal of a model at design points."""
    if model == "spline1d":
        x = np.asarray(X, dtype=np.float64)
        x = x if x.ndim == 1 else x[:, 0]
        return 0.6 * np.sin(1.5 * np.pi * x)
    if model == "additive2d":
        pts = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return 0.4 * np.sin(1.5 * np.pi * pts[:, 0]) + 0.1 * (0.5 - pts[:, 1]) ** 3
    raise ValueError(f"unknown model {model!r}")


def generate(model: str, N: int, seed: int, c: float = 1.0) -> dnc.Dataset:
    """Draw a sample: uniform design, signal scaled by ``c``, N(0,1) noise.

    Deterministic given ``seed`` (counter-based generator, stream 0).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    d = 1 if model == "spline1d" else 2
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    xs = rng.uniform(0.0, 1.0, size=(N, d)) if d > 1 else rng.uniform(0.0, 1.0, size=N)
    ys = c * signal(model, xs) + rng.standard_normal(N)
    return dnc.Dataset(xs=xs, ys=ys)


def _eval_grid(model: str, grid_size: int) -> NDArray[np.float64]:
    axis = (np.arange(grid_size) + 0.5) / grid_size
    if model == "spline1d":
        return axis
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([g1.reshape(-1), g2.reshape(-1)])


def mse_of_estimate(
    est: dnc.DncEstimate, model: str, c: float, grid_size: int | None = None
) -> float:
    """Grid-L2 error of the averaged estimate against ``c * signal``.

    1D: ``grid_size`` midpoints (default 512); 2D: ``grid_size x grid_size``
    (default 64 x 64).
    """
    if grid_size is None:
        grid_size = DEFAULT_GRID_1D if model == "spline1d" else DEFAULT_GRID_2D
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    grid = _eval_grid(model, grid_size)
    truth = c * signal(model, grid)
    return float(np.mean((dnc.predict_bar(est, grid) - truth) ** 2))


def _spectrum_for(cfg: SweepConfig, lam: float) -> Spectrum:
    M = truncation_level(cfg.m, lam, rates.leading_eigenvalue(cfg.family, cfg.m), cfg.d)
    if cfg.model == "spline1d":
        return periodic_sobolev(cfg.m, M=M)
    return additive(cfg.m, d=2, M=M)


def _cell_lambda(cfg: SweepConfig, n: int) -> float:
    """Regularization for one cell.

    Rate-rule lambdas are evaluated at the subsample size ``n`` — the
    per-machine problem is the one being regularized — while explicit
    lambdas are used as given.
    """
    if cfg.lambda_source == "explicit":
        return cfg.lambda_value
    rx = rates.prescribe(cfg.family, cfg.m, cfg.d, max(n, 2), cfg.lambda_task)
    return rx.lam


def _run_replication(cfg: SweepConfig, N: int, s: int, lam: float, spec: Spectrum, seed: int):
    data = generate(cfg.model, N, seed, cfg.c)
    part = dnc.partition(data, s, seed)
    est = dnc.fit_all(spec, data, part, lam, cfg.solve_path, workers=1)
    mse = mse_of_estimate(est, cfg.model, cfg.c, cfg.grid_size)
    if cfg.sigma2_mode == "plugin":
        sigma2 = estimate_sigma2(est, data, part)
    else:
        sigma2 = cfg.sigma2_value
    report = test_statistic(est, N=part.N_effective, sigma2=sigma2, alpha=cfg.alpha)
    return mse, 1.0 if report.reject else 0.0


def run_sweep(cfg: SweepConfig) -> ExperimentResult:
    """Run the full (N, rho) grid.

    Per cell: ``s = max(1, round(N^rho))`` (half-up), ``n = floor(N/s)``;
    replication ``r`` uses seed ``base_seed + r``. Replication failures are
    recorded; a cell with more than 10% failures raises
    :class:`SweepError`. Aggregation is an ordered fold over the
    replication index, so the result is identical for any worker count.
    """
    cells = []
    for N in cfg.N_list:
        for rho in cfg.rho_list:
            t0 = time.perf_counter()
            s = max(1, math.floor(N**rho + 0.5))
            n = N // s
            lam = _cell_lambda(cfg, n)
            spec = _spectrum_for(cfg, lam)
            seeds = [cfg.base_seed + r for r in range(cfg.replications)]

            def one(seed, _N=N, _s=s, _lam=lam, _spec=spec):
                try:
                    return _run_replication(cfg, _N, _s, _lam, _spec, seed)
                except Exception as exc:  # recorded, not fatal
                    return exc

            if cfg.workers > 1:
                with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                    outcomes = list(pool.map(one, seeds))
            else:
                outcomes = [one(seed) for seed in seeds]

            mses, rejects, failures = [], [], 0
            for out in outcomes:  # ordered fold
                if isinstance(out, Exception):
                    failures += 1
                    continue
                mses.append(out[0])
                rejects.append(out[1])
            if failures > 0.1 * cfg.replications:
                raise SweepError(
                    f"cell N={N}, rho={rho}: {failures}/{cfg.replications} "
                    f"replications failed"
                )
            if failures:
                warnings.warn(
                    f"cell N={N}, rho={rho}: {failures} replications failed",
                    UserWarning,
                )
            mses_a = np.array(mses)
            rej_a = np.array(rejects)
            k = len(mses_a)
            cells.append(
                CellResult(
                    N=N, rho=rho, s=s, n=n, lam=lam,
                    mse_mean=float(mses_a.mean()),
                    mse_stderr=float(mses_a.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                    reject_rate=float(rej_a.mean()),
                    reject_stderr=float(rej_a.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                    reps=k,
                    dropped=N - s * n,
                    failures=failures,
                    wall_time=time.perf_counter() - t0,
                )
            )
    return ExperimentResult(config=cfg, cells=tuple(cells))
