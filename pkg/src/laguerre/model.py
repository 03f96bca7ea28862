"""Space-time Poisson models for beta, beta-prime and Gaussian-Voronoi tessellations.

All three models share the Lebesgue spatial marginal and differ only in the
density of activation times.  Times carry squared-length units because the
power function adds them to squared distances.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergentMassError, ModelError

INF = math.inf


class Family(str, enum.Enum):
    BETA = "beta"
    BETA_PRIME = "beta-prime"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Seed:
    """A space-time generator: nucleus position ``v`` and activation time ``h``."""

    v: tuple[float, ...]
    h: float

    def __post_init__(self):
        v = tuple(float(c) for c in np.atleast_1d(self.v))
        if not all(math.isfinite(c) for c in v):
            raise ModelError(f"seed position must be finite, got {v}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "h", float(self.h))

    @property
    def d(self) -> int:
        return len(self.v)


@dataclass(frozen=True)
class TimeRange:
    """Interval of activation times; ``lo``/``hi`` may be -inf/+inf."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ModelError(f"empty time range [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def contains(self, h) -> np.ndarray | bool:
        return (h >= self.lo) & (h <= self.hi)


@dataclass(frozen=True)
class ModelParams:
    family: Family
    beta: float | None = None
    gamma: float | None = None
    d: int = 2

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if int(self.d) != self.d or self.d < 1:
            raise ModelError(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if fam is Family.GAUSSIAN:
            if self.beta is not None or self.gamma is not None:
                raise ModelError("the Gaussian model takes no beta/gamma")
            return
        if self.beta is None:
            raise ModelError(f"{fam.value} model requires beta")
        gamma = 1.0 if self.gamma is None else float(self.gamma)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", gamma)
        if not gamma > 0 or not math.isfinite(gamma):
            raise ModelError(f"gamma must be positive, got {gamma}")
        if fam is Family.BETA and not self.beta > -1:
            raise ModelError(f"beta model requires beta > -1, got {self.beta}")
        if fam is Family.BETA_PRIME and not self.beta > self.d / 2 + 1:
            raise ModelError(
                f"beta-prime model requires beta > d/2 + 1 = {self.d / 2 + 1}, got {self.beta}"
            )
        c = intensity_constant(self)
        if not (math.isfinite(c) and c > 0):
            raise ModelError(f"normalizing constant is not finite and positive: {c}")

    @classmethod
    def beta_model(cls, beta: float, gamma: float = 1.0, d: int = 2) -> "ModelParams":
        return cls(Family.BETA, beta, gamma, d)

    @classmethod
    def beta_prime(cls, beta: float, gamma: float = 1.0, d: int = 2) -> "ModelParams":
        return cls(Family.BETA_PRIME, beta, gamma, d)

    @classmethod
    def gaussian(cls, d: int = 2) -> "ModelParams":
        return cls(Family.GAUSSIAN, d=d)

    @property
    def support(self) -> TimeRange:
        if self.family is Family.BETA:
            return TimeRange(0.0, INF)
        if self.family is Family.BETA_PRIME:
            return TimeRange(-INF, 0.0)
        return TimeRange(-INF, INF)

    def in_support(self, h) -> np.ndarray | bool:
        h = np.asarray(h, dtype=float)
        if self.family is Family.BETA:
            out = h >= 0
        elif self.family is Family.BETA_PRIME:
            out = h < 0
        else:
            out = np.isfinite(h)
        return out if out.ndim else bool(out)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "beta": self.beta, "gamma": self.gamma, "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        return cls(Family(data["family"]), data.get("beta"), data.get("gamma"), data.get("d", 2))

    def label(self) -> str:
        if self.family is Family.GAUSSIAN:
            return f"gaussian(d={self.d})"
        return f"{self.family.value}(beta={self.beta:g}, gamma={self.gamma:g}, d={self.d})"


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi]`` in R^d."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(c) for c in self.lo)
        hi = tuple(float(c) for c in self.hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ModelError(f"degenerate box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(v)
        return np.all((v >= self.lo) & (v <= self.hi), axis=1)

    def expanded(self, pad: float) -> "Box":
        return Box(tuple(a - pad for a in self.lo), tuple(b + pad for b in self.hi))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, data: dict) -> "Box":
        return cls(tuple(data["lo"]), tuple(data["hi"]))


@dataclass(frozen=True)
class Window:
    """The observation window W_n = [-n, n]^d, optionally shifted."""

    n: float
    center: tuple[float, ...] = field(default=(0.0, 0.0))

    def __post_init__(self):
        if not self.n > 0:
            raise ModelError(f"window half-width must be positive, got {self.n}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def of(cls, n: float, d: int = 2) -> "Window":
        return cls(n, (0.0,) * d)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return (2.0 * self.n) ** self.d

    def box(self, pad: float = 0.0) -> Box:
        c = np.asarray(self.center)
        return Box(tuple(c - self.n - pad), tuple(c + self.n + pad))

    def contains(self, v) -> np.ndarray:
        return self.box().contains(v)


def power(w: Sequence[float], x: Seed) -> float:
    """Power of the point ``w`` with respect to seed ``x``: ||w - v||^2 + h."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(x.v)
    if w.shape != v.shape:
        raise ModelError(f"dimension mismatch: point has {w.shape}, seed has {v.shape}")
    diff = w - v
    return float(diff @ diff + x.h)


def _log_intensity_constant(m: ModelParams) -> float:
    d, b = m.d, m.beta
    log_pi = (d + 1) / 2 * math.log(math.pi)
    if m.family is Family.BETA:
        return math.lgamma(d / 2 + b + 1.5) - log_pi - math.lgamma(b + 1)
    if m.family is Family.BETA_PRIME:
        return math.lgamma(b) - log_pi - math.lgamma(b - (d + 1) / 2)
    return 0.0


def intensity_constant(m: ModelParams) -> float:
    """c_{d,beta} (beta model), c'_{d,beta} (beta-prime model) or 1 (Gaussian)."""
    if m.family is Family.BETA and not m.beta > -1:
        raise ModelError(f"beta model requires beta > -1, got {m.beta}")
    if m.family is Family.BETA_PRIME and not m.beta > m.d / 2 + 1:
        raise ModelError(f"beta-prime model requires beta > d/2 + 1, got {m.beta}")
    return math.exp(_log_intensity_constant(m))


def time_density(m: ModelParams, h):
    """Density of the activation-time measure; zero off the support."""
    h = np.asarray(h, dtype=float)
    out = np.zeros_like(h)
    if m.family is Family.GAUSSIAN:
        out = np.exp(h)
    elif m.family is Family.BETA:
        pos = h >= 0
        with np.errstate(divide="ignore"):
            out[pos] = m.gamma * intensity_constant(m) * h[pos] ** m.beta
    else:
        neg = h < 0
        out[neg] = m.gamma * intensity_constant(m) * (-h[neg]) ** (-m.beta)
    return float(out) if out.ndim == 0 else out


def cumulative_mass(m: ModelParams, h):
    """Antiderivative G with G(lower support end) = 0: mass per unit volume below h.

    Infinite where the measure diverges (beta-prime at h >= 0, beta and
    Gaussian as h -> +inf).
    """
    h = np.asarray(h, dtype=float)
    if m.family is Family.GAUSSIAN:
        with np.errstate(over="ignore"):
            out = np.exp(h)
    elif m.family is Family.BETA:
        k = m.gamma * intensity_constant(m) / (m.beta + 1)
        out = np.where(h > 0, k * np.clip(h, 0, None) ** (m.beta + 1), 0.0)
    else:
        k = m.gamma * intensity_constant(m) / (m.beta - 1)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(h < 0, k * np.abs(np.minimum(h, -1e-300)) ** (1 - m.beta), INF)
    return float(out) if out.ndim == 0 else out


def inverse_cumulative_mass(m: ModelParams, g):
    """Inverse of :func:`cumulative_mass` on the support."""
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore"):
        if m.family is Family.GAUSSIAN:
            out = np.log(g)
        elif m.family is Family.BETA:
            k = m.gamma * intensity_constant(m) / (m.beta + 1)
            out = (g / k) ** (1 / (m.beta + 1))
        else:
            k = m.gamma * intensity_constant(m) / (m.beta - 1)
            out = -((g / k) ** (1 / (1 - m.beta)))
    return float(out) if out.ndim == 0 else out


def total_mass(m: ModelParams, box_volume: float, time_range: TimeRange) -> float:
    """Expected number of seeds in a box of the given volume times ``time_range``."""
    if not box_volume > 0:
        raise ModelError(f"box volume must be positive, got {box_volume}")
    sup = m.support
    lo, hi = max(time_range.lo, sup.lo), min(time_range.hi, sup.hi)
    if time_range.lo < sup.lo or time_range.hi > sup.hi:
        if not (m.family is Family.BETA_PRIME and time_range.hi == 0.0):
            raise ModelError(f"time range {time_range} outside support {sup}")
    if lo >= hi:
        return 0.0
    g_hi = cumulative_mass(m, hi)
    if not math.isfinite(g_hi):
        raise DivergentMassError(f"{m.label()} has infinite mass on {time_range}")
    return box_volume * (g_hi - cumulative_mass(m, lo))


def paraboloid_mass(m: ModelParams, h: float) -> float:
    """Intensity mass of the region below the downward paraboloid with apex (v, h).

    This is the probability exponent of the event that no seed claims the
    apex position before time h.
    """
    d = m.d
    kappa = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    if m.family is Family.GAUSSIAN:
        return math.pi ** (d / 2) * math.exp(h)
    if m.family is Family.BETA:
        if h <= 0:
            return 0.0
        b = math.exp(math.lgamma(d / 2 + 1) + math.lgamma(m.beta + 1) - math.lgamma(d / 2 + m.beta + 2))
        return m.gamma * intensity_constant(m) * kappa * b * h ** (d / 2 + m.beta + 1)
    if h >= 0:
        return INF
    e = m.beta - d / 2 - 1
    b = math.exp(math.lgamma(d / 2 + 1) + math.lgamma(e) - math.lgamma(m.beta))
    return m.gamma * intensity_constant(m) * kappa * b * (-h) ** (-e)


def length_scale(m: ModelParams) -> float:
    """Spatial scale under which the model is invariant (v -> a v, h -> a^2 h)."""
    if m.family is Family.BETA:
        return m.gamma ** (-1.0 / (m.d + 2 * m.beta + 2))
    if m.family is Family.BETA_PRIME:
        return m.gamma ** (1.0 / (2 * m.beta - m.d - 2))
    return 1.0
