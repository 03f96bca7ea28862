"""Named end-to-end checks with measured values.

Each check returns a ``CheckResult``; ``run_check(name)`` is what the
``verify`` subcommand calls.  Monte-Carlo checks share replicates through a
cache keyed by model, tolerance, master seed, window size and replicate, so
overlapping experiments are simulated once per process.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .fixtures import cluster_configuration, good_event_level
from .model import Box, ModelParams, TimeRange, cumulative_mass, total_mass
from .oracle import GridSpec, grid_extreme_witness, naive_coverage_time
from .sampler import SeedSet, make_rng, sample_process, sample_times, stream_label
from .stats import (
    DOUBLING_TOL,
    ExperimentConfig,
    RunStats,
    default_tail_grid,
    log_survival_curvature,
    normality_diagnostics,
    run_replications,
    tail_slope,
    tail_survival,
)
from .tessellation import extreme_points, is_extreme_lp, tessellate

MASTER_SEED = 20240601
MODELS = (ModelParams.beta_model(5.0), ModelParams.beta_prime(12.0), ModelParams.gaussian())
# time ranges for small hand-sized instances in the unit box
SMALL_RANGES = {
    "beta": TimeRange(0.0, 1.0),
    "beta-prime": TimeRange(-math.inf, -1.0),
    "gaussian": TimeRange(-math.inf, 0.0),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({vals}; {self.elapsed:.1f}s)"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "elapsed": round(self.elapsed, 3),
                "measured": {k: _plain(v) for k, v in self.measured.items()}}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def _plain(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def random_instance(m: ModelParams, k: int, gen: np.random.Generator) -> SeedSet:
    """``k`` seeds uniform in the unit square with times from the model on a small range."""
    tr = SMALL_RANGES[m.family.value]
    pos = gen.uniform(0.0, 1.0, size=(k, 2))
    h = sample_times(m, tr.lo, tr.hi, gen, k)
    return SeedSet(pos, h, m)


# --- exact checks ------------------------------------------------------------


def check_detect_equiv(instances: int = 500, resolution: int = 512) -> CheckResult:
    gen = make_rng(stream_label(MASTER_SEED, 1))
    mismatches = witness_failures = seeds = 0
    for t in range(instances):
        m = MODELS[t % 3]
        S = random_instance(m, int(gen.integers(2, 16)), gen)
        hull = extreme_points(S)
        lp = np.array([is_extreme_lp(i, S) for i in range(len(S))])
        mismatches += int(np.sum(hull != lp))
        for i, w in enumerate(grid_extreme_witness(S, GridSpec.around(S, resolution))):
            if w is not None and not hull[i]:
                witness_failures += 1
        seeds += len(S)
    return CheckResult("detect-equiv", mismatches == 0 and witness_failures == 0,
                       {"instances": instances, "seeds": seeds, "mismatches": mismatches,
                        "witness_failures": witness_failures})


def check_fixture() -> CheckResult:
    counts = {}
    ok = True
    for m in MODELS:
        level = good_event_level(m)
        a = int(extreme_points(cluster_configuration("A", level)).sum())
        b_flags = extreme_points(cluster_configuration("B", level))
        counts[m.family.value] = (a, int(b_flags.sum()))
        ok &= a == 4 and int(b_flags.sum()) == 3 and not b_flags[0]
    return CheckResult("fixture", bool(ok), {"extreme_counts": counts})


def check_voronoi(instances: int = 100) -> CheckResult:
    gen = make_rng(stream_label(MASTER_SEED, 3))
    failures = 0
    for _ in range(instances):
        k = int(gen.integers(2, 40))
        pos = gen.uniform(-1.0, 1.0, size=(k, 2))
        S = SeedSet(pos, np.full(k, float(gen.normal())))
        failures += int(not extreme_points(S).all())
    return CheckResult("voronoi", failures == 0, {"instances": instances, "failures": failures})


def _time_cdf(m: ModelParams, tr: TimeRange):
    lo = float(cumulative_mass(m, tr.lo)) if math.isfinite(tr.lo) else 0.0
    span = float(cumulative_mass(m, tr.hi)) - lo
    return lambda h: (cumulative_mass(m, h) - lo) / span


def check_sampler(draws: int = 100_000) -> CheckResult:
    box = Box((0.0, 0.0), (1.0, 1.0))
    measured, ok = {}, True
    for j, m in enumerate(MODELS):
        tr = SMALL_RANGES[m.family.value]
        gen = make_rng(stream_label(MASTER_SEED, 4, j))
        counts = np.empty(draws)
        times = []
        for r in range(draws):
            S = sample_process(m, box, tr, gen)
            counts[r] = len(S)
            times.append(S.heights)
        mass = total_mass(m, 1.0, tr)
        se = counts.std(ddof=1) / math.sqrt(draws)
        z = abs(counts.mean() - mass) / se
        ks = sps.kstest(np.concatenate(times), _time_cdf(m, tr))
        measured[m.family.value] = {"mean": counts.mean(), "mass": mass, "z": z, "ks_p": ks.pvalue}
        ok &= z <= 4 and ks.pvalue > 1e-3
    return CheckResult("sampler", bool(ok), measured)


def check_covertime(instances: int = 100, resolution: int = 8192, tol: float = 1e-3) -> CheckResult:
    gen = make_rng(stream_label(MASTER_SEED, 5))
    worst = 0.0
    cells = increases = done = 0
    while done < instances:
        m = MODELS[done % 3]
        S = random_instance(m, int(gen.integers(4, 13)), gen)
        res = tessellate(S)
        bounded = np.flatnonzero(res.extreme & ~res.unbounded & res.certified)
        if len(bounded) == 0:
            continue
        done += 1
        for i in bounded:
            naive = naive_coverage_time(int(i), S, angular_resolution=resolution)
            worst = max(worst, abs(naive - res.coverage_time[i]))
            cells += 1
        # one more seed can only cover cells sooner
        tr = SMALL_RANGES[m.family.value]
        extra = S.with_seeds(gen.uniform(0, 1, size=(1, 2)), sample_times(m, tr.lo, tr.hi, gen, 1))
        res2 = tessellate(extra)
        increases += int(np.sum(res2.coverage_time[:len(S)] > res.coverage_time))
    return CheckResult("covertime", worst <= tol and increases == 0,
                       {"instances": instances, "cells": cells, "max_abs_diff": worst, "increases": increases})


# --- Monte-Carlo checks ------------------------------------------------------

_CACHE: dict = {}
GAUSSIAN = ModelParams.gaussian()
BETA5 = ModelParams.beta_model(5.0)
TOL = 0.01


def experiment(m: ModelParams, sizes, replications: int, cache: dict | None = None) -> RunStats:
    cfg = ExperimentConfig(m, tuple(sizes), replications, TOL, MASTER_SEED, certify=True, tails=True)
    return run_replications(cfg, cache=_CACHE if cache is None else cache)


def check_varscale(replications: int = 300, budget: float = 900.0) -> CheckResult:
    measured, ok = {}, True
    for m in (GAUSSIAN, BETA5):
        t0 = time.perf_counter()
        st = experiment(m, (4, 8, 16), replications)
        elapsed = time.perf_counter() - t0
        ratio = st.variances[16.0] / st.variances[8.0]
        slope = st.scaling.slope
        measured[m.family.value] = {"slope": slope, "stderr": st.scaling.stderr, "var16/var8": ratio,
                                    "seconds": elapsed}
        ok &= st.scaling.defined and 1.5 <= slope <= 2.5 and 2.5 <= ratio <= 6.5 and elapsed < budget
    return CheckResult("varscale", bool(ok), measured)


def check_clt(replications: int = 500, budget: float = 1200.0) -> CheckResult:
    t0 = time.perf_counter()
    st = experiment(GAUSSIAN, (4, 16), replications)
    elapsed = time.perf_counter() - t0
    dk4, dk16 = st.normality[4.0][0], st.normality[16.0][0]
    ok = dk16 <= 0.10 and dk16 <= dk4 + 0.02 and elapsed < budget
    return CheckResult("clt", bool(ok), {"d_K(4)": dk4, "d_K(16)": dk16, "d_W(16)": st.normality[16.0][1],
                                         "seconds": elapsed})


def check_tails(min_seeds: int = 10_000, budget: float = 900.0) -> CheckResult:
    t0 = time.perf_counter()
    measured, ok = {}, True
    for m, target in ((GAUSSIAN, "slope"), (BETA5, "concave")):
        reps = 2
        while True:
            st = experiment(m, (16,), reps)
            if len(st.tail_times) >= min_seeds:
                break
            reps *= 2
        t = st.tail_times
        curve = tail_survival(t, default_tail_grid(t))
        monotone = bool(np.all(np.diff(curve.p) <= 0))
        entry = {"seeds": len(t), "replicates": reps, "monotone": monotone, "anomalies": st.anomalies}
        if target == "slope":
            s = tail_slope(curve)
            entry["slope"] = s
            ok &= monotone and 0.25 <= s <= 1.0
        else:
            c = log_survival_curvature(curve)
            entry["quadratic_coef"] = c
            ok &= monotone and c < 0
        measured[m.family.value] = entry
    elapsed = time.perf_counter() - t0
    measured["seconds"] = elapsed
    return CheckResult("tails", bool(ok and elapsed < budget), measured)


def check_doubling(varscale_reps: int = 300, clt_reps: int = 500) -> CheckResult:
    runs = [experiment(GAUSSIAN, (4, 8, 16), varscale_reps), experiment(BETA5, (4, 8, 16), varscale_reps),
            experiment(GAUSSIAN, (4, 16), clt_reps)]
    measured, ok = {}, True
    for st in runs:
        key = f"{st.config.model.family.value} R={st.config.replications}"
        measured[key] = {repr(n): c for n, c in st.doubling_change.items()}
        ok &= all(c < DOUBLING_TOL for c in st.doubling_change.values())
    return CheckResult("doubling", bool(ok), measured)


def check_determinism(threads=(1, 2, 3)) -> CheckResult:
    cfg = ExperimentConfig(GAUSSIAN, (2.0, 3.0, 4.0), 4, TOL, MASTER_SEED, tails=True)
    docs = [run_replications(cfg, workers=w).to_json() for w in threads]
    same = all(d == docs[0] for d in docs)
    return CheckResult("determinism", same, {"threads": list(threads), "bytes": len(docs[0])})


CHECKS = {
    "detect-equiv": check_detect_equiv,
    "fixture": check_fixture,
    "voronoi": check_voronoi,
    "sampler": check_sampler,
    "covertime": check_covertime,
    "varscale": check_varscale,
    "clt": check_clt,
    "tails": check_tails,
    "doubling": check_doubling,
    "determinism": check_determinism,
}


def run_check(name: str) -> CheckResult:
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    t0 = time.perf_counter()
    res = CHECKS[name]()
    res.elapsed = time.perf_counter() - t0
    return res
