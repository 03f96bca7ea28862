"""Brute-force verifiers for the exact tessellation code.

Everything here is deliberately naive (direct power comparisons on grids
and spheres) and shares no code with the hull path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .model import Box
from .sampler import SeedSet
from .tessellation import sphere_coverage_check

TIE_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Regular grid of ``resolution`` nodes per axis spanning ``box`` (endpoints included)."""

    box: Box
    resolution: int

    def __post_init__(self):
        if self.resolution < 2:
            raise PreconditionError("grid resolution must be at least 2")

    @classmethod
    def around(cls, S: SeedSet, resolution: int, scale: float = 1.0) -> "GridSpec":
        """Box around all centers with margin ``scale`` * max(max pairwise distance, 1)."""
        pos = S.positions
        lo, hi = pos.min(0), pos.max(0)
        margin = scale * max(float(np.linalg.norm(hi - lo)), 1.0)
        return cls(Box(tuple(lo - margin), tuple(hi + margin)), resolution)

    def refined(self) -> "GridSpec":
        """Twice as fine, keeping every existing node."""
        return GridSpec(self.box, 2 * self.resolution - 1)

    def nodes(self) -> np.ndarray:
        axes = [np.linspace(a, b, self.resolution) for a, b in zip(self.box.lo, self.box.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


def _powers(w: np.ndarray, S: SeedSet) -> np.ndarray:
    diff = w[:, None, :] - S.positions[None, :, :]
    return (diff * diff).sum(-1) + S.heights[None, :]


def nearest_power_owner(w, S: SeedSet, tol: float = TIE_TOL) -> set[int]:
    """Indices of the seeds of least power at ``w`` (ties within ``tol``)."""
    if len(S) == 0:
        raise PreconditionError("nearest_power_owner needs at least one seed")
    p = _powers(np.atleast_2d(np.asarray(w, dtype=float)), S)[0]
    return {int(k) for k in np.flatnonzero(p <= p.min() + tol)}


def grid_extreme_witness(S: SeedSet, g: GridSpec, margin: float = TIE_TOL, chunk: int = 65536) -> list:
    """Per seed, a grid node where that seed alone has least power, or None.

    A witness proves the cell has interior; a missing witness proves nothing.
    Among several witnesses the node with the widest power gap is returned.
    """
    n = len(S)
    best_gap = np.full(n, -np.inf)
    best_node = np.zeros((n, S.d))
    nodes = g.nodes()
    # |w|^2 is common to every seed, so comparing -2 w.v + |v|^2 + h suffices
    lifted = (S.positions ** 2).sum(1) + S.heights
    for start in range(0, len(nodes), chunk):
        w = nodes[start:start + chunk]
        if n == 1:
            owner = np.zeros(len(w), dtype=int)
            gap = np.full(len(w), np.inf)
        else:
            p = lifted[None, :] - 2.0 * (w @ S.positions.T)
            part = np.partition(p, 1, axis=1)
            owner = np.argmin(p, axis=1)
            gap = part[:, 1] - part[:, 0]
        ok = np.flatnonzero(gap > margin)
        if len(ok) == 0:
            continue
        # widest gap per owner
        order = ok[np.lexsort((gap[ok], owner[ok]))]
        last = np.r_[owner[order][1:] != owner[order][:-1], True]
        for k in order[last]:
            i = owner[k]
            if gap[k] > best_gap[i]:
                best_gap[i] = gap[k]
                best_node[i] = w[k]
    return [best_node[i].copy() if best_gap[i] > -np.inf else None for i in range(n)]


def _owned_exposure(i: int, S: SeedSet, resolution: int, widen: int = 4) -> float | None:
    """Largest power w.r.t. seed i over grid nodes strictly owned by i.

    Cells can lie far from every center and be thin, so the grid margin
    grows by factors of 4 (at most ``widen`` times), each margin tried at
    ``resolution`` and at 4x that resolution, until some node is owned by i.
    """
    scale = 1.0
    for _ in range(widen + 1):
        for res in (resolution, 4 * resolution - 3):
            nodes = GridSpec.around(S, res, scale).nodes()
            best = -np.inf
            for start in range(0, len(nodes), 65536):
                p = _powers(nodes[start:start + 65536], S)
                others = np.delete(p, i, axis=1)
                owned = others.min(axis=1) - p[:, i] > TIE_TOL
                if np.any(owned):
                    best = max(best, float(p[owned, i].max()))
            if best > -np.inf:
                return best
        scale *= 4.0
    return None


def naive_coverage_time(i: int, S: SeedSet, angular_resolution: int = 8192,
                        bisection_tol: float = 1e-8, grid_resolution: int = 257,
                        ceiling_steps: int = 6) -> float:
    """Coverage time of seed i by bisection on the sphere-coverage criterion.

    The search starts from a time at which a grid node strictly inside the
    cell is still exposed.  The first scan ceiling is h_i + 16 diam^2; while
    the sphere is still exposed there, the ceiling grows by factors of 16 (at
    most ``ceiling_steps`` times) before the cell is reported unbounded (+inf).
    """
    if len(S) < 2:
        return math.inf
    t_lo = _owned_exposure(i, S, grid_resolution)
    if t_lo is None:
        raise PreconditionError(f"seed {i} has no grid witness; it does not look extreme")
    pos = S.positions
    diam = float(np.max(np.linalg.norm(pos[:, None] - pos[None], axis=-1)))
    h = float(S.heights[i])
    span = 16.0 * max(diam, 1e-12) ** 2
    for _ in range(ceiling_steps + 1):
        t_hi = h + span
        if t_hi > t_lo and sphere_coverage_check(i, S, t_hi, angular_resolution):
            break
        span *= 16.0
    else:
        return math.inf
    while t_hi - t_lo > bisection_tol * max(1.0, abs(t_hi)):
        mid = 0.5 * (t_lo + t_hi)
        if sphere_coverage_check(i, S, mid, angular_resolution):
            t_hi = mid
        else:
            t_lo = mid
    return 0.5 * (t_lo + t_hi)
