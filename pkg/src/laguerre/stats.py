"""Monte-Carlo harness: F_n replicates, variance scaling, normality and tails.

Each replicate (window size n, index k) owns the random stream
``stream_label(master_seed, round(1000 n), k)``; results are gathered in
(n, k) order, so every statistic is independent of scheduling and of the
number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats as sps

from .errors import PreconditionError, TruncationError
from .model import ModelParams, Window
from .sampler import stream_label, truncation_plan
from .serialize import atomic_write_text, encode_float
from .simulate import sample_realization
from .tessellation import TessellationResult

# Relative change of mean F_n tolerated when padding and cutoff are doubled.
DOUBLING_TOL = 0.02
THREADS_ENV = "LAGUERRE_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    sizes: tuple[float, ...]
    replications: int
    tol: float = 0.01
    master_seed: int = 0
    certify: bool = True
    tails: bool = False  # keep coverage times of certified extreme seeds

    def __post_init__(self):
        sizes = tuple(float(n) for n in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if self.replications < 2:
            raise PreconditionError(f"need at least 2 replications, got {self.replications}")
        if not sizes or any(n <= 0 for n in sizes):
            raise PreconditionError("window sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise PreconditionError(f"window sizes must be strictly increasing, got {list(sizes)}")
        if not self.tol > 0:
            raise PreconditionError(f"tol must be positive, got {self.tol}")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "sizes": list(self.sizes),
            "replications": self.replications,
            "tol": encode_float(self.tol),
            "master_seed": self.master_seed,
            "certify": self.certify,
            "tails": self.tails,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(ModelParams.from_dict(data["model"]), tuple(data["sizes"]), int(data["replications"]),
                   float(data.get("tol", 0.01)), int(data.get("master_seed", 0)),
                   bool(data.get("certify", True)), bool(data.get("tails", False)))


@dataclass
class ReplicateResult:
    """Outcome of one replicate; ``doubled`` is None without certification."""

    count: int
    uncertified: int = 0
    doubled: int | None = None
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    anomalies: int = 0  # certified window seeds with unbounded cells


def f_n_count(T: TessellationResult, window: Window) -> tuple[int, int]:
    """Number of extreme seeds located in ``window``, and how many window seeds are uncertified."""
    inside = window.contains(T.seeds.positions)
    return int(np.sum(T.extreme & inside)), int(np.sum(inside & ~T.certified))


def stream_for(cfg: ExperimentConfig, n: float, k: int) -> int:
    return stream_label(cfg.master_seed, int(round(1000 * n)), k)


def simulate_replicate(cfg: ExperimentConfig, n: float, k: int) -> ReplicateResult:
    window = Window.of(n, cfg.model.d)
    try:
        plan = truncation_plan(cfg.model, window, cfg.tol)
    except TruncationError as exc:
        raise TruncationError(str(exc), n=n) from exc
    if not plan.reached:
        raise TruncationError(f"no truncation plan reaches tol={cfg.tol} for n={n}", n=n)
    real = sample_realization(cfg.model, window, plan, stream_for(cfg, n, k), doubled=cfg.certify)
    res = real.result
    if not cfg.certify:
        # without the doubled twin nothing can be certified
        res.certified[:] = False
    count, unc = f_n_count(res, window)
    doubled = f_n_count(real.doubled_result, window)[0] if cfg.certify else None
    times = np.empty(0)
    anomalies = 0
    if cfg.tails:
        sel = window.contains(res.seeds.positions) & res.extreme & res.certified
        anomalies = int(np.sum(sel & res.unbounded))
        times = res.coverage_time[sel & ~res.unbounded].copy()
    return ReplicateResult(count, unc, doubled, times, anomalies)


# --- diagnostics -------------------------------------------------------------


@dataclass
class ScalingResult:
    slope: float
    stderr: float
    ratios: dict  # n -> Var(F_n) / n^d
    defined: bool = True


def variance_scaling(variances: dict, d: int = 2) -> ScalingResult:
    """Least-squares slope of log Var(F_n) against log n.

    ``variances`` maps window size to sample variance.  A zero variance
    leaves the slope undefined (reported as nan and flagged).
    """
    if len(variances) < 3:
        raise PreconditionError("variance scaling needs at least 3 window sizes")
    ns = np.array(sorted(variances), dtype=float)
    var = np.array([variances[n] for n in sorted(variances)], dtype=float)
    ratios = {float(n): float(v / n ** d) for n, v in zip(ns, var)}
    if np.any(var <= 0):
        return ScalingResult(math.nan, math.nan, ratios, False)
    fit = sps.linregress(np.log(ns), np.log(var))
    return ScalingResult(float(fit.slope), float(fit.stderr), ratios)


def normality_diagnostics(samples) -> tuple[float, float]:
    """Kolmogorov and Wasserstein distances of standardized samples to N(0, 1).

    Standardization uses the sample mean and unbiased variance.  d_K is the
    exact supremum, checked on both sides of every jump of the empirical CDF;
    d_W couples the sorted sample with normal quantiles at (i - 1/2)/R.
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < 30:
        raise PreconditionError(f"normality diagnostics need at least 30 samples, got {len(x)}")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise PreconditionError("samples have zero variance")
    z = np.sort((x - x.mean()) / sd)
    R = len(z)
    vals, counts = np.unique(z, return_counts=True)
    right = np.cumsum(counts) / R
    left = right - counts / R
    cdf = sps.norm.cdf(vals)
    d_k = float(max(np.abs(right - cdf).max(), np.abs(left - cdf).max()))
    q = sps.norm.ppf((np.arange(1, R + 1) - 0.5) / R)
    d_w = float(np.mean(np.abs(z - q)))
    return d_k, d_w


@dataclass
class SurvivalCurve:
    grid: np.ndarray
    p: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    count: int

    def to_dict(self) -> dict:
        return {
            "H": [encode_float(v) for v in self.grid],
            "survival": [float(v) for v in self.p],
            "wilson_lo": [float(v) for v in self.lo],
            "wilson_hi": [float(v) for v in self.hi],
            "count": self.count,
        }


def tail_survival(samples, grid) -> SurvivalCurve:
    """Empirical P(T > H) on ``grid`` with Wilson 95% intervals.

    ``samples`` are coverage times of certified seeds; -inf counts as T <= H.
    """
    t = np.sort(np.asarray(samples, dtype=float))
    grid = np.asarray(grid, dtype=float)
    n = len(t)
    if n == 0:
        raise PreconditionError("tail_survival needs at least one sample")
    above = n - np.searchsorted(t, grid, side="right")
    lo, hi = np.empty(len(grid)), np.empty(len(grid))
    for j, k in enumerate(above):
        ci = sps.binomtest(int(k), n).proportion_ci(0.95, method="wilson")
        lo[j], hi[j] = ci.low, ci.high
    return SurvivalCurve(grid, above / n, lo, hi, n)


def _tail_range(curve: SurvivalCurve, p_range) -> np.ndarray:
    return (curve.p >= p_range[0]) & (curve.p <= p_range[1])


def tail_slope(curve: SurvivalCurve, p_range=(1e-3, 0.5)) -> float:
    """Regression slope of log(-log P(T > H)) against H where P lies in ``p_range``."""
    sel = _tail_range(curve, p_range) & (curve.p < 1)
    if sel.sum() < 3:
        return math.nan
    return float(sps.linregress(curve.grid[sel], np.log(-np.log(curve.p[sel]))).slope)


def log_survival_curvature(curve: SurvivalCurve, p_range=(1e-3, 0.5)) -> float:
    """Quadratic coefficient of a least-squares fit of log P(T > H) on ``p_range``.

    Negative means the log-survival bends down: faster than exponential decay.
    """
    sel = _tail_range(curve, p_range)
    if sel.sum() < 4:
        return math.nan
    return float(np.polyfit(curve.grid[sel], np.log(curve.p[sel]), 2)[0])


def default_tail_grid(samples, points: int = 60) -> np.ndarray:
    t = np.asarray(samples, dtype=float)
    t = t[np.isfinite(t)]
    if len(t) == 0:
        return np.zeros(1)
    return np.linspace(t.min(), t.max(), points)


# --- replication ---------------------------------------------------------------


def worker_count() -> int:
    """Worker processes: LAGUERRE_THREADS when set, otherwise the CPU count."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise PreconditionError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if cap < 1:
            raise PreconditionError(f"{THREADS_ENV} must be at least 1, got {cap}")
        return cap
    return os.cpu_count() or 1


def _run_task(args):
    fn, cfg, n, k = args
    return fn(cfg, n, k)


@dataclass
class RunStats:
    config: ExperimentConfig
    samples: dict  # n -> list of F_n
    doubled: dict  # n -> list of doubled-configuration F_n (empty without certification)
    uncertified: dict  # n -> list of uncertified window seeds per replicate
    means: dict
    variances: dict
    scaling: ScalingResult | None
    normality: dict  # n -> (d_K, d_W) or None
    doubling_change: dict  # n -> relative change of mean F_n
    survival: SurvivalCurve | None = None
    tail_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    anomalies: int = 0
    flags: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not any(f.startswith("UNCERTIFIED") for f in self.flags)

    def to_dict(self) -> dict:
        keys = [float(n) for n in self.config.sizes]

        def per_n(d, f=lambda v: v):
            return {repr(n): f(d[n]) for n in keys if n in d}

        out = {
            "config": self.config.to_dict(),
            "samples": per_n(self.samples, list),
            "doubled_samples": per_n(self.doubled, list),
            "uncertified_seeds": per_n(self.uncertified, list),
            "mean": per_n(self.means, encode_float),
            "variance": per_n(self.variances, encode_float),
            "scaling": None if self.scaling is None else {
                "slope": encode_float(self.scaling.slope),
                "stderr": encode_float(self.scaling.stderr),
                "defined": self.scaling.defined,
                "var_over_n_d": {repr(n): encode_float(v) for n, v in self.scaling.ratios.items()},
            },
            "normality": per_n(self.normality, lambda v: None if v is None else
                               {"d_K": encode_float(v[0]), "d_W": encode_float(v[1])}),
            "doubling_change": per_n(self.doubling_change, encode_float),
            "survival": None if self.survival is None else self.survival.to_dict(),
            "tail_samples": len(self.tail_times),
            "anomalies": self.anomalies,
            "flags": list(self.flags),
            "certified": self.certified,
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def write(self, path) -> Path:
        return atomic_write_text(path, self.to_json())

    def samples_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "replicate", "F_n", "F_n_doubled", "uncertified"])
        for n in self.config.sizes:
            dbl = self.doubled.get(n) or [None] * len(self.samples[n])
            for k, (c, c2, u) in enumerate(zip(self.samples[n], dbl, self.uncertified[n])):
                w.writerow([repr(n), k, c, "" if c2 is None else c2, u])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        return atomic_write_text(path, self.samples_csv())


def summarize(cfg: ExperimentConfig, results: dict) -> RunStats:
    """Aggregate replicate results keyed by (n, k) into RunStats."""
    samples, doubled, unc, means, variances, normality, change = {}, {}, {}, {}, {}, {}, {}
    flags, times, anomalies = [], [], 0
    for n in cfg.sizes:
        reps = [results[(n, k)] for k in range(cfg.replications)]
        x = np.array([r.count for r in reps], dtype=float)
        samples[n] = [int(r.count) for r in reps]
        unc[n] = [int(r.uncertified) for r in reps]
        means[n] = float(x.mean())
        variances[n] = float(x.var(ddof=1))
        try:
            normality[n] = normality_diagnostics(x)
        except PreconditionError:
            normality[n] = None
        if cfg.certify:
            doubled[n] = [int(r.doubled) for r in reps]
            m2 = float(np.mean(doubled[n]))
            change[n] = abs(m2 - means[n]) / means[n] if means[n] > 0 else (0.0 if m2 == 0 else math.inf)
            if not change[n] < DOUBLING_TOL:
                flags.append(f"UNCERTIFIED: doubling changes mean F_n by {change[n]:.4f} at n={n!r}")
            if sum(unc[n]):
                flags.append(f"UNCERTIFIED: {sum(unc[n])} window seeds uncertified at n={n!r}")
        else:
            flags.append(f"UNCERTIFIED: certification disabled at n={n!r}")
        for r in reps:
            times.append(r.times)
            anomalies += r.anomalies
    scaling = None
    if len(cfg.sizes) >= 3:
        scaling = variance_scaling(variances, cfg.model.d)
        if not scaling.defined:
            flags.append("slope undefined: zero variance")
    tail_times = np.concatenate(times) if times else np.empty(0)
    survival = None
    if cfg.tails and len(tail_times):
        survival = tail_survival(tail_times, default_tail_grid(tail_times))
    if anomalies:
        flags.append(f"anomaly: {anomalies} certified window cells are unbounded")
    return RunStats(cfg, samples, doubled, unc, means, variances, scaling, normality, change,
                    survival, tail_times, anomalies, flags)


def run_replications(cfg: ExperimentConfig, workers: int | None = None,
                     replicate_fn: Callable | None = None, cache: dict | None = None) -> RunStats:
    """Run every (n, replicate) pair and aggregate.

    ``replicate_fn(cfg, n, k)`` replaces the simulation (it must be a
    module-level function when ``workers > 1``).  ``cache`` maps
    ``(model label, tol, master seed, certify, tails, n, k)`` to earlier
    results and is filled in place.
    """
    fn = replicate_fn or simulate_replicate
    workers = worker_count() if workers is None else max(int(workers), 1)
    tasks = [(n, k) for n in cfg.sizes for k in range(cfg.replications)]

    def key(n, k):
        return (cfg.model.label(), cfg.tol, cfg.master_seed, cfg.certify, cfg.tails, n, k)

    results = {}
    todo = []
    for n, k in tasks:
        if cache is not None and key(n, k) in cache:
            results[(n, k)] = cache[key(n, k)]
        else:
            todo.append((n, k))
    if workers == 1 or len(todo) <= 1:
        for n, k in todo:
            results[(n, k)] = fn(cfg, n, k)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(todo) // (4 * workers))
            for (n, k), r in zip(todo, pool.map(_run_task, [(fn, cfg, n, k) for n, k in todo], chunksize=chunk)):
                results[(n, k)] = r
    if cache is not None:
        for n, k in todo:
            cache[key(n, k)] = results[(n, k)]
    return summarize(cfg, results)
