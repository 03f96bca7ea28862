"""Sampling the space-time Poisson process on a finite box x time-range."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from .errors import DivergentMassError, ModelError, PreconditionError
from .model import (
    INF,
    Box,
    Family,
    ModelParams,
    Seed,
    TimeRange,
    Window,
    cumulative_mass,
    inverse_cumulative_mass,
    paraboloid_mass,
    time_density,
    total_mass,
)
from .serialize import atomic_write_text, decode_float, encode_float

# Expected seeds per unit volume below the default (tol = inf) time cutoff.
DEFAULT_CUTOFF_MASS = 1.0


def stream_label(master_seed: int, *key: int) -> int:
    """64-bit label of an independent random stream derived from ``master_seed``.

    Replicate ``k`` of window index ``j`` uses ``stream_label(seed, j, k)``;
    the label alone reproduces the stream, independently of scheduling.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(label: int) -> np.random.Generator:
    """Counter-based (Philox) generator for a stream label."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(label))))


@dataclass
class SeedSet:
    """A finite simple configuration of seeds, stored column-wise.

    ``positions`` has shape (N, d) and ``heights`` shape (N,).  ``rng_label``
    is None for hand-built instances, which are then treated as complete
    configurations (nothing was truncated away).
    """

    positions: np.ndarray
    heights: np.ndarray
    model: ModelParams | None = None
    box: Box | None = None
    time_range: TimeRange | None = None
    rng_label: int | None = None

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=float).reshape(-1)
        pos = np.asarray(self.positions, dtype=float)
        if pos.size == 0:
            d = self.model.d if self.model else (self.box.d if self.box else max(pos.shape[-1:] or (2,)))
            self.positions = pos.reshape(0, d)
        else:
            self.positions = pos.reshape(len(self.heights), -1)
        if not np.all(np.isfinite(self.positions)):
            raise ModelError("seed positions must be finite")
        if self.model is not None:
            if self.positions.shape[1] != self.model.d and len(self.heights):
                raise ModelError(f"positions have dimension {self.positions.shape[1]}, model has d={self.model.d}")
            if len(self.heights) and not np.all(self.model.in_support(self.heights)):
                raise ModelError(f"activation times outside the support of {self.model.label()}")
        if self.box is not None and len(self.heights) and not np.all(self.box.contains(self.positions)):
            raise ModelError("seed positions outside the sampling box")
        if self.time_range is not None and len(self.heights):
            if not np.all(self.time_range.contains(self.heights)):
                raise ModelError("activation times outside the sampling time range")

    @classmethod
    def from_seeds(cls, seeds, model: ModelParams | None = None, **kw) -> "SeedSet":
        seeds = [s if isinstance(s, Seed) else Seed(*s) for s in seeds]
        d = seeds[0].d if seeds else (model.d if model else 2)
        pos = np.array([s.v for s in seeds], dtype=float).reshape(len(seeds), d)
        return cls(pos, np.array([s.h for s in seeds], dtype=float), model=model, **kw)

    def __len__(self) -> int:
        return len(self.heights)

    def __getitem__(self, i: int) -> Seed:
        return Seed(tuple(self.positions[i]), float(self.heights[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @property
    def is_complete(self) -> bool:
        return self.rng_label is None

    def subset(self, mask) -> "SeedSet":
        return SeedSet(
            self.positions[mask], self.heights[mask], self.model, self.box, self.time_range, self.rng_label
        )

    def with_seeds(self, positions, heights) -> "SeedSet":
        """Copy with extra seeds appended; box/range bookkeeping is dropped."""
        pos = np.vstack([self.positions, np.atleast_2d(positions)])
        return SeedSet(pos, np.concatenate([self.heights, np.atleast_1d(heights)]), self.model,
                       rng_label=self.rng_label)

    def is_simple(self) -> bool:
        if len(self) < 2:
            return True
        rows = np.column_stack([self.positions, self.heights])
        return len(np.unique(rows, axis=0)) == len(rows)

    def metadata(self) -> dict:
        return {
            "model": self.model.to_dict() if self.model else None,
            "box": self.box.to_dict() if self.box else None,
            "range": [encode_float(self.time_range.lo), encode_float(self.time_range.hi)] if self.time_range else None,
            "rng_label": self.rng_label,
            "d": self.d,
            "count": len(self),
        }

    def write(self, csv_path: str | Path) -> tuple[Path, Path]:
        """Write ``<name>.csv`` (header ``x0,...,x{d-1},h``) and a JSON sidecar."""
        csv_path = Path(csv_path)
        lines = [",".join([f"x{k}" for k in range(self.d)] + ["h"])]
        for v, h in zip(self.positions, self.heights):
            lines.append(",".join(repr(float(c)) for c in (*v, h)))
        atomic_write_text(csv_path, "\n".join(lines) + "\n")
        sidecar = csv_path.with_suffix(".json")
        atomic_write_text(sidecar, json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return csv_path, sidecar

    @classmethod
    def read(cls, csv_path: str | Path) -> "SeedSet":
        csv_path = Path(csv_path)
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise PreconditionError(f"{csv_path} is empty")
        header, body = rows[0], [r for r in rows[1:] if r]
        if not header or header[-1] != "h" or header[:-1] != [f"x{k}" for k in range(len(header) - 1)]:
            raise PreconditionError(f"{csv_path}: bad header {header}")
        d = len(header) - 1
        data = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), d + 1)
        meta = {}
        sidecar = csv_path.with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
        model = ModelParams.from_dict(meta["model"]) if meta.get("model") else None
        box = Box.from_dict(meta["box"]) if meta.get("box") else None
        rng = meta.get("range")
        trange = TimeRange(decode_float(rng[0]), decode_float(rng[1])) if rng else None
        return cls(data[:, :d], data[:, d], model, box, trange, meta.get("rng_label"))


def _check_range(m: ModelParams, tr: TimeRange) -> TimeRange:
    sup = m.support
    lo, hi = max(tr.lo, sup.lo), min(tr.hi, sup.hi)
    if lo >= hi:
        raise ModelError(f"time range {tr} does not meet support {sup}")
    if not math.isfinite(cumulative_mass(m, hi)):
        raise DivergentMassError(f"{m.label()} has infinite mass on {tr}")
    return TimeRange(lo, hi)


def _quantile(m: ModelParams, lo, hi, u):
    """Vectorised u-quantile of the normalised time density on [lo, hi]."""
    lo, hi, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (lo, hi, u)))
    if m.family is Family.GAUSSIAN:
        # log(e^lo + u (e^hi - e^lo)) evaluated relative to hi
        with np.errstate(divide="ignore"):
            return hi + np.log(u + (1 - u) * np.exp(lo - hi))
    g_lo, g_hi = cumulative_mass(m, lo), cumulative_mass(m, hi)
    h = inverse_cumulative_mass(m, g_lo + u * (g_hi - g_lo))
    return np.clip(h, lo, hi)


def inverse_time_cdf(m: ModelParams, time_range: TimeRange, u: float) -> float:
    """The u-quantile of the normalised time density restricted to ``time_range``."""
    if not 0.0 <= u <= 1.0:
        raise PreconditionError(f"u must lie in [0, 1], got {u}")
    tr = _check_range(m, time_range)
    return float(_quantile(m, tr.lo, tr.hi, u))


def sample_times(m: ModelParams, lo, hi, rng: np.random.Generator, size: int) -> np.ndarray:
    return _quantile(m, lo, hi, rng.random(size))


def sample_process(m: ModelParams, box: Box, time_range: TimeRange, rng) -> SeedSet:
    """One realisation of the Poisson process restricted to ``box x time_range``.

    ``rng`` is a stream label (int) or a numpy Generator.
    """
    label = rng if isinstance(rng, (int, np.integer)) else None
    gen = make_rng(label) if label is not None else rng
    if box.d != m.d:
        raise ModelError(f"box dimension {box.d} differs from model dimension {m.d}")
    sup = m.support
    lo, hi = max(time_range.lo, sup.lo), min(time_range.hi, sup.hi)
    if lo >= hi:
        return SeedSet(np.empty((0, m.d)), np.empty(0), m, box, time_range, label)
    mass = total_mass(m, box.volume, TimeRange(lo, hi))
    count = int(gen.poisson(mass))
    pos = gen.uniform(box.lo, box.hi, size=(count, m.d))
    heights = sample_times(m, lo, hi, gen, count)
    return SeedSet(pos, heights, m, box, time_range, label)


# --- truncation planning -------------------------------------------------


def tail_form(m: ModelParams, h, c: float = 1.0):
    """Functional form of the coverage-time tail bound with unit prefactor."""
    h = np.asarray(h, dtype=float)
    d = m.d
    if m.family is Family.BETA:
        x = np.clip(h - 1.0, 0.0, None)
        return np.exp(-m.gamma * c * x ** (d / 2 + m.beta + 1))
    if m.family is Family.BETA_PRIME:
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(h < 0, np.exp(-m.gamma * c * np.abs(h) ** (-(m.beta - d / 2 - 1))), 0.0)
    with np.errstate(over="ignore"):
        return np.exp(-c * np.exp(h / 2))


def default_cutoff(m: ModelParams) -> float:
    """Time level below which one seed per unit volume is expected."""
    return float(inverse_cumulative_mass(m, DEFAULT_CUTOFF_MASS))


def typical_cell_diameter(m: ModelParams) -> float:
    """Spacing of seeds below the level where a seed's own paraboloid has unit mass."""
    h_star = optimize.brentq(lambda h: math.log(paraboloid_mass(m, h)), *_level_bracket(m))
    lam = cumulative_mass(m, h_star)
    return 2.0 / lam ** (1.0 / m.d)


def _level_bracket(m: ModelParams) -> tuple[float, float]:
    if m.family is Family.BETA:
        return 1e-12, 1e6
    if m.family is Family.BETA_PRIME:
        return -1e12, -1e-12
    return -700.0, 700.0


def log_tail_form(m: ModelParams, h: float, c: float = 1.0) -> float:
    d = m.d
    if m.family is Family.BETA:
        return -m.gamma * c * max(h - 1.0, 0.0) ** (d / 2 + m.beta + 1)
    if m.family is Family.BETA_PRIME:
        return -m.gamma * c * (-h) ** (-(m.beta - d / 2 - 1)) if h < 0 else -INF
    return -c * math.exp(h / 2) if h < 1400 else -INF


def time_error(m: ModelParams, volume: float, hi: float, c: float = 1.0) -> float:
    """Heuristic expected number of seeds above ``hi`` that would still form cells."""
    upper = 0.0 if m.family is Family.BETA_PRIME else INF
    if hi >= upper:
        return 0.0

    def integrand(h):
        if m.family is Family.GAUSSIAN:
            log_dens = h
        else:
            dens = float(time_density(m, h))
            if dens <= 0:
                return 0.0
            log_dens = math.log(dens)
        return math.exp(log_dens + log_tail_form(m, h, c))

    val, _ = integrate.quad(integrand, hi, upper, limit=200)
    return volume * max(val, 0.0)


@dataclass(frozen=True)
class TruncationPlan:
    """Finite region used in place of the infinite process around a window.

    The sampled box is W_n enlarged by ``padding`` on each side; activation
    times are restricted to ``time_cutoff``.  ``est_error`` is the heuristic
    expected number of seeds in W_n whose status could depend on excluded seeds.
    """

    padding: float
    time_cutoff: TimeRange
    est_error: float
    reached: bool = True

    def region(self, window: Window) -> Box:
        return window.box(self.padding)

    def doubled(self, m: ModelParams) -> "TruncationPlan":
        """Plan with doubled padding and doubled time cutoff.

        The upper cutoff moves from ``hi`` to ``2 hi`` (beta), to ``hi / 2``
        (beta-prime, halving the gap to 0) or to ``hi + max(|hi|, 1)``
        (Gaussian).  Lower cutoffs are never finite for these plans.
        """
        hi = self.time_cutoff.hi
        if m.family is Family.BETA:
            hi2 = 2 * hi
        elif m.family is Family.BETA_PRIME:
            hi2 = hi / 2
        else:
            hi2 = hi + max(abs(hi), 1.0)
        return TruncationPlan(2 * self.padding, TimeRange(self.time_cutoff.lo, hi2), self.est_error, self.reached)

    def to_dict(self) -> dict:
        return {
            "padding": self.padding,
            "time_cutoff": [encode_float(self.time_cutoff.lo), encode_float(self.time_cutoff.hi)],
            "est_error": encode_float(self.est_error),
            "reached": self.reached,
        }


def _floor_level(m: ModelParams, volume: float, budget: float) -> float:
    """Lowest relevant time: fewer than ``budget`` seeds expected below it."""
    if m.family is Family.BETA:
        return 0.0
    return float(inverse_cumulative_mass(m, budget / volume))


def _solve_cutoff(m: ModelParams, volume: float, budget: float, c: float) -> tuple[float, bool]:
    lo = default_cutoff(m)
    if m.family is Family.BETA_PRIME:
        hi_bound = -1e-9
    elif m.family is Family.BETA:
        hi_bound = max(lo, 1.0) * 1e3
    else:
        hi_bound = 60.0

    def bad(h):
        return time_error(m, volume, h, c) > budget or float(tail_form(m, h, c)) > budget

    if not bad(lo):
        return lo, True
    if bad(hi_bound):
        return hi_bound, False
    a, b = lo, hi_bound
    for _ in range(200):
        mid = 0.5 * (a + b)
        if bad(mid):
            a = mid
        else:
            b = mid
        if b - a <= 1e-10 * max(1.0, abs(b)):
            break
    return b, True


def truncation_plan(m: ModelParams, window: Window, tol: float, c: float = 1.0) -> TruncationPlan:
    """Padding and time cutoff so that the heuristic truncation error is <= ``tol``.

    Half of ``tol`` is spent on seeds above the cutoff (weighted by the tail
    form of the coverage time with constant ``c``), half on seeds below the
    floor level that sets the spatial influence radius.  The padding is
    ``2 sqrt(hi - floor)`` plus two typical cell diameters.
    """
    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    lo = m.support.lo
    if math.isinf(tol):
        return TruncationPlan(0.0, TimeRange(lo, default_cutoff(m)), INF, True)
    diam = typical_cell_diameter(m)
    pad = 0.0
    for _ in range(8):
        # solve against a slightly larger region so the final padding stays inside it
        vol = window.box(1.05 * pad + 1.0).volume
        hi, reached = _solve_cutoff(m, vol, tol / 2, c)
        floor = _floor_level(m, vol, tol / 2)
        new_pad = 2.0 * math.sqrt(max(hi - floor, 0.0)) + 2.0 * diam
        if abs(new_pad - pad) <= 1e-9 * new_pad:
            pad = new_pad
            break
        pad = new_pad
    vol = window.box(pad).volume
    floor_err = 0.0 if m.family is Family.BETA else vol * float(cumulative_mass(m, floor))
    est = time_error(m, vol, hi, c) + floor_err
    return TruncationPlan(pad, TimeRange(lo, hi), est, reached and est <= tol)
