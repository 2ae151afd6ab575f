"""Monte Carlo experiments, timing benchmarks and the returns transform.

Replication ``r`` of an experiment simulates its path from the seed
``derive_seed(master_seed, r)``, so results do not depend on the number of
workers or on the order in which replications finish.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg, stats

from .errors import ExperimentUnstableError, FarimaError
from .inference import FitOptions, lse_fit, onestep_fit, subsample_lse
from .model import ParamSpace, ParamVector
from .simulate import NoiseSpec, SimConfig, derive_seed, simulate_farima

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "ExperimentResult",
    "TimingConfig",
    "run_monte_carlo",
    "run_timing",
    "timing_to_csv",
    "transform_returns",
]

log = logging.getLogger(__name__)

METHODS = ("lse_full", "lse_subsample", "onestep")
MAX_FAILURE_RATE = 0.2


@dataclass
class ExperimentConfig:
    """Monte Carlo design.  ``sim.noise.seed`` is ignored: each replication
    gets its own seed derived from ``master_seed``."""

    M: int
    sim: SimConfig
    delta: float = 0.9
    methods: Sequence[str] = METHODS
    curvature_mode: str = "outer_product"
    master_seed: int = 0
    workers: int = 1
    space: Optional[ParamSpace] = None
    options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not (0.5 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (1/2, 1], got {self.delta}")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}, got {list(self.methods)}")


@dataclass
class ExperimentResult:
    """Per-replication output, one ``(M, k)`` array per method.

    Failed fits hold NaN rows and are listed in ``errors``; the summary is
    computed on the successful rows only.
    """

    config: ExperimentConfig
    seeds: np.ndarray
    estimates: dict[str, np.ndarray]
    rescaled_errors: dict[str, np.ndarray]
    std_errors: dict[str, np.ndarray]
    omega: dict[str, np.ndarray]
    omega_strong: dict[str, np.ndarray]
    wall_times: dict[str, np.ndarray]
    errors: dict[str, dict[int, str]]
    summary: dict[str, dict]

    @property
    def failures(self) -> dict[str, int]:
        return {m: len(e) for m, e in self.errors.items()}

    def to_csv(self, path) -> None:
        """One row per replication per method."""
        k = self.config.sim.theta0.flat.size
        header = (
            ["replication", "seed", "method", "success"]
            + [f"theta_{i + 1}" for i in range(k)]
            + [f"se_{i + 1}" for i in range(k)]
            + ["wall_time", "error"]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in range(self.config.M):
                for m in self.config.methods:
                    err = self.errors[m].get(r, "")
                    w.writerow(
                        [r, int(self.seeds[r]), m, int(not err)]
                        + [repr(float(v)) for v in self.estimates[m][r]]
                        + [repr(float(v)) for v in self.std_errors[m][r]]
                        + [repr(float(self.wall_times[m][r])), err]
                    )

    def summary_document(self) -> dict:
        cfg = self.config
        return {
            "M": cfg.M,
            "n": cfg.sim.n,
            "burnin": cfg.sim.burnin,
            "noise": cfg.sim.noise.kind,
            "sigma": cfg.sim.noise.sigma,
            "theta0": cfg.sim.theta0.flat.tolist(),
            "p": cfg.sim.theta0.order.p,
            "q": cfg.sim.theta0.order.q,
            "delta": cfg.delta,
            "curvature_mode": cfg.curvature_mode,
            "master_seed": cfg.master_seed,
            "methods": list(cfg.methods),
            "failures": self.failures,
            "summary": self.summary,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary_document(), fh, indent=2)


def _summarize(errs: np.ndarray, times: np.ndarray) -> dict:
    ok = ~np.any(np.isnan(errs), axis=1)
    e = errs[ok]
    if e.shape[0] == 0:
        nan = [float("nan")] * errs.shape[1]
        return {"successes": 0, "bias": nan, "std": nan, "skewness": nan, "excess_kurtosis": nan}
    std = e.std(axis=0, ddof=1) if e.shape[0] > 1 else np.zeros(e.shape[1])
    if e.shape[0] > 2:
        skew = stats.skew(e, axis=0)
        kurt = stats.kurtosis(e, axis=0)
    else:
        skew = kurt = np.full(e.shape[1], np.nan)
    return {
        "successes": int(e.shape[0]),
        "bias": e.mean(axis=0).tolist(),
        "std": np.asarray(std).tolist(),
        "skewness": np.asarray(skew).tolist(),
        "excess_kurtosis": np.asarray(kurt).tolist(),
        "median_wall_time": float(np.median(times[ok])),
    }


def _replicate(cfg: ExperimentConfig, r: int) -> dict:
    seed = derive_seed(cfg.master_seed, r)
    sim = replace(cfg.sim, noise=replace(cfg.sim.noise, seed=seed))
    x = simulate_farima(sim)
    order = sim.theta0.order
    space = cfg.space or ParamSpace(order)
    out = {"seed": seed, "fits": {}, "errors": {}}
    sub = None
    sub_time = 0.0
    for method in METHODS:
        if method not in cfg.methods:
            continue
        try:
            if method == "lse_full":
                fit = lse_fit(x, order, space, cfg.options)
            elif method == "lse_subsample":
                fit = subsample_lse(x, order, space, cfg.delta, cfg.options)
                sub, sub_time = fit, fit.wall_time
            else:
                fit = onestep_fit(
                    x,
                    order,
                    space,
                    cfg.delta,
                    cfg.curvature_mode,
                    cfg.options,
                    initial=None if sub is None else sub.theta_hat,
                )
                if sub is not None:
                    fit.wall_time += sub_time
            out["fits"][method] = fit
        except (FarimaError, linalg.LinAlgError, ValueError) as exc:
            out["errors"][method] = f"{type(exc).__name__}: {exc}"
    return out


def _worker(args):
    cfg, r = args
    return r, _replicate(cfg, r)


def run_monte_carlo(cfg: ExperimentConfig) -> ExperimentResult:
    """Simulate ``cfg.M`` paths and fit every requested method on each."""
    k = cfg.sim.theta0.flat.size
    M = cfg.M
    theta0 = cfg.sim.theta0.flat
    n = cfg.sim.n
    est = {m: np.full((M, k), np.nan) for m in cfg.methods}
    se = {m: np.full((M, k), np.nan) for m in cfg.methods}
    om = {m: np.full((M, k, k), np.nan) for m in cfg.methods}
    om_s = {m: np.full((M, k, k), np.nan) for m in cfg.methods}
    times = {m: np.full(M, np.nan) for m in cfg.methods}
    errors = {m: {} for m in cfg.methods}
    seeds = np.zeros(M, dtype=np.uint64)

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_worker, [(cfg, r) for r in range(M)], chunksize=max(1, M // (4 * cfg.workers))))
    else:
        results = [_worker((cfg, r)) for r in range(M)]

    for r, rep in results:
        seeds[r] = rep["seed"]
        for m, fit in rep["fits"].items():
            est[m][r] = fit.theta_hat.flat
            se[m][r] = fit.std_errors
            om[m][r] = fit.omega_hat
            if fit.omega_strong is not None:
                om_s[m][r] = fit.omega_strong
            times[m][r] = fit.wall_time
        for m, msg in rep["errors"].items():
            errors[m][r] = msg

    for m in cfg.methods:
        rate = len(errors[m]) / M
        if rate > MAX_FAILURE_RATE:
            raise ExperimentUnstableError(
                f"experiment unstable: {len(errors[m])} of {M} {m} fits failed"
            )
        if errors[m]:
            log.warning("%s: %d of %d fits failed", m, len(errors[m]), M)

    rescaled = {m: np.sqrt(n) * (est[m] - theta0) for m in cfg.methods}
    summary = {m: _summarize(rescaled[m], times[m]) | {"failures": len(errors[m])} for m in cfg.methods}
    return ExperimentResult(cfg, seeds, est, rescaled, se, om, om_s, times, errors, summary)


@dataclass
class TimingConfig:
    theta0: ParamVector
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec("weak_product"))
    burnin: int = 1000
    repetitions: int = 5
    deltas: Sequence[float] = (0.7, 0.9)
    include_lse: bool = True
    curvature_mode: str = "outer_product"
    master_seed: int = 0
    options: FitOptions = field(default_factory=FitOptions)


def run_timing(sizes: Sequence[int], cfg: TimingConfig) -> list[dict]:
    """Median wall-clock time per ``(n, method)`` on a single worker.

    Every method at a given ``(n, repetition)`` sees the same simulated path.
    """
    sizes = [int(s) for s in sizes]
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if cfg.repetitions < 3:
        raise ValueError("timing needs at least 3 repetitions per size")
    order = cfg.theta0.order
    space = ParamSpace(order)
    methods = (["lse_full"] if cfg.include_lse else []) + [f"onestep_delta={d:g}" for d in cfg.deltas]
    rows = []
    for n in sizes:
        samples = {m: [] for m in methods}
        for rep in range(cfg.repetitions):
            seed = derive_seed(cfg.master_seed, n * 1000 + rep)
            x = simulate_farima(SimConfig(cfg.theta0, n, cfg.burnin, replace(cfg.noise, seed=seed)))
            for m in methods:
                t0 = time.perf_counter()
                if m == "lse_full":
                    lse_fit(x, order, space, cfg.options)
                else:
                    delta = float(m.split("=")[1])
                    onestep_fit(x, order, space, delta, cfg.curvature_mode, cfg.options)
                samples[m].append(time.perf_counter() - t0)
        for m in methods:
            rows.append({"n": n, "method": m, "median_time": float(np.median(samples[m])), "times": samples[m]})
    return rows


def timing_to_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "method", "median_time", "repetitions"])
        for row in rows:
            w.writerow([row["n"], row["method"], repr(row["median_time"]), len(row["times"])])


def transform_returns(prices: ArrayLike) -> np.ndarray:
    """Centered squared percentage log-returns.

    ``r_t = 100 log(p_t / p_{t-1})`` and ``X_t = r_t^2 - mean(r^2)``; the
    output is one shorter than the input.
    """
    p = np.asarray(prices, dtype=float).ravel()
    if p.size < 2:
        raise ValueError("need at least two prices")
    if not np.all(np.isfinite(p)):
        raise ValueError("prices must be finite")
    if np.any(p <= 0):
        raise ValueError("prices must be strictly positive")
    r = 100.0 * np.diff(np.log(p))
    r2 = r * r
    return r2 - r2.mean()
