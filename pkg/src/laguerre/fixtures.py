"""Hand-built seed configurations with known extreme sets."""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .model import Family, ModelParams
from .sampler import SeedSet

DELTA = 1 / 16


def good_event_level(m: ModelParams) -> float:
    """Reference level l: 1/8 for the beta and Gaussian models, -1/16 for beta-prime."""
    return -1 / 16 if m.family is Family.BETA_PRIME else 1 / 8


def simplex_vertices(d: int) -> np.ndarray:
    """d + 1 vertices of a regular simplex on the unit sphere of R^d."""
    if d == 2:
        ang = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
        return np.column_stack([np.cos(ang), np.sin(ang)])
    e = np.eye(d + 1) - 1.0 / (d + 1)
    # orthonormal basis of the hyperplane sum(x) = 0
    q, _ = np.linalg.qr(e[:, :d])
    pts = e @ q
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def cluster_configuration(kind: str, level: float, z=(0.0, 0.0), delta: float = DELTA,
                          model: ModelParams | None = None) -> SeedSet:
    """d + 2 seeds around center z: one central seed and one per simplex vertex.

    The simplex vertices x_i sit on the sphere of radius 3 delta around z.
    Kind "A": central seed (z, l - 9 delta^2), outer seeds at
    z + 4 (x_i - z)/3 with time l - 18 delta^2; all d + 2 seeds are extreme.
    Kind "B": central seed (z, l), outer seeds at z + 2 (x_i - z)/3 with time
    l - 19 delta^2; the central seed is covered by the outer ones.
    """
    z = np.asarray(z, dtype=float)
    d = len(z)
    x = z + 3 * delta * simplex_vertices(d)
    if kind == "A":
        outer, h0, h1 = z + 4 * (x - z) / 3, level - 9 * delta ** 2, level - 18 * delta ** 2
    elif kind == "B":
        outer, h0, h1 = z + 2 * (x - z) / 3, level, level - 19 * delta ** 2
    else:
        raise PreconditionError(f"unknown configuration kind {kind!r}")
    pos = np.vstack([z, outer])
    h = np.array([h0] + [h1] * (d + 1))
    return SeedSet(pos, h, model)
