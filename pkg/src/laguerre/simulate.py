"""Sampling a truncated realization around a window without drawing every seed.

Late seeds are overwhelmingly covered before they activate.  A bottom layer
A (times below H0, about ``BASE_MASS`` seeds per unit area) is always drawn.
Its lower hull gives, at every position v inside conv(A), the time
phi_A(v) = max_f (t_f - |v - c_f|^2) at or after which a seed at v lies on
or above the hull; adding seeds only lowers the hull, so such a seed can
never be extreme.  Seeds above H0 are therefore drawn per grid cell only up
to an upper bound of phi_A over the cell, and then filtered pointwise.

Outside conv(A) no such bound exists.  There, seeds above the sampled band
are omitted, and afterwards every facet touching a window seed is checked to
lie strictly below all omitted seeds; a window seed failing the check is
reported uncertified.  The base configuration and the doubled one (padding
and cutoff doubled) are drawn from one stream, so the doubling check
compares nested configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .model import Box, ModelParams, TimeRange, Window, cumulative_mass, inverse_cumulative_mass
from .sampler import SeedSet, TruncationPlan, make_rng, sample_times
from .tessellation import HullData, TessellationResult, certify, lower_hull, tessellate

# Seeds per unit area in the always-sampled bottom layer.
BASE_MASS = 4.0
# Width of the strip along each box boundary where no band above H0 is drawn.
STRIP = 1.5
# Relative slack when comparing a time to a pruning bound (keeps borderline seeds).
_KEEP_SLACK = 1e-9


@dataclass
class _Grid:
    lo: np.ndarray
    step: np.ndarray
    shape: tuple[int, int]

    @classmethod
    def over(cls, box: Box, target: float) -> "_Grid":
        lo, hi = np.asarray(box.lo), np.asarray(box.hi)
        shape = tuple(int(k) for k in np.maximum(np.ceil((hi - lo) / target), 1))
        return cls(lo, (hi - lo) / np.asarray(shape), shape)

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def cell_of(self, pts: np.ndarray) -> np.ndarray:
        ij = np.floor((pts - self.lo) / self.step).astype(int)
        ij = np.clip(ij, 0, np.asarray(self.shape) - 1)
        return ij[:, 0] * self.shape[1] + ij[:, 1]

    def rects(self, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ij = np.column_stack([cells // self.shape[1], cells % self.shape[1]])
        lo = self.lo + ij * self.step
        return lo, lo + self.step


@dataclass
class _Bounds:
    """Pruning data derived from the lower hull of a bottom layer."""

    hull: HullData
    ring: np.ndarray  # counterclockwise boundary of conv(layer centers)
    cell_bound: np.ndarray  # upper bound of phi over each grid cell (-inf: no facet)
    inner: np.ndarray  # cell lies inside conv(layer centers)
    ptr: np.ndarray  # cell -> facets, compressed rows
    fac: np.ndarray

    def inside(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Points inside conv(layer centers) by more than ``margin``."""
        return self.boundary_distance(pts) > margin

    def boundary_distance(self, pts: np.ndarray, chunk: int = 20000) -> np.ndarray:
        """Signed distance to the boundary of conv(layer centers), positive inside."""
        if len(self.ring) < 3:
            return np.full(len(pts), -np.inf)
        a = self.ring
        e = np.roll(a, -1, axis=0) - a
        norm = np.linalg.norm(e, axis=1)
        out = np.empty(len(pts))
        for s in range(0, len(pts), chunk):
            p = pts[s:s + chunk]
            cross = e[None, :, 0] * (p[:, None, 1] - a[None, :, 1]) - e[None, :, 1] * (p[:, None, 0] - a[None, :, 0])
            out[s:s + chunk] = np.min(cross / norm[None, :], axis=1)
        return out

    def phi(self, pts: np.ndarray, cells: np.ndarray) -> np.ndarray:
        """phi at each point: the exact hull bound inside conv(layer), +inf outside."""
        out = np.full(len(pts), np.inf)
        inside = self.inside(pts, margin=1e-9)
        k = np.flatnonzero(inside)
        if len(k) == 0:
            return out
        counts = self.ptr[cells[k] + 1] - self.ptr[cells[k]]
        rows = np.repeat(k, counts)
        starts = np.repeat(self.ptr[cells[k]], counts)
        offs = np.arange(len(rows)) - np.repeat(np.cumsum(counts) - counts, counts)
        f = self.fac[starts + offs]
        diff = pts[rows] - self.hull.centers[f]
        val = self.hull.times[f] - (diff * diff).sum(1)
        best = np.full(len(pts), -np.inf)
        np.maximum.at(best, rows, val)
        out[k] = best[k]
        # a covered point always has a containing facet; -inf means none was listed
        out[k[best[k] == -np.inf]] = np.inf
        return out


def _bounds(pos: np.ndarray, h: np.ndarray, grid: _Grid) -> _Bounds:
    hull = lower_hull(pos, h) if len(h) else None
    empty = _Bounds(hull, np.empty((0, 2)), np.full(grid.size, -np.inf), np.zeros(grid.size, bool),
                    np.zeros(grid.size + 1, dtype=int), np.empty(0, dtype=int))
    if hull is None or len(hull.facets) == 0:
        return empty
    ring = pos[ConvexHull(pos).vertices]
    tri = pos[hull.facets]
    lo_ij = np.floor((tri.min(1) - grid.lo) / grid.step).astype(int)
    hi_ij = np.floor((tri.max(1) - grid.lo) / grid.step).astype(int)
    shape = np.asarray(grid.shape)
    lo_ij, hi_ij = np.clip(lo_ij, 0, shape - 1), np.clip(hi_ij, 0, shape - 1)
    nx, ny = hi_ij[:, 0] - lo_ij[:, 0] + 1, hi_ij[:, 1] - lo_ij[:, 1] + 1
    counts = nx * ny
    f = np.repeat(np.arange(len(tri)), counts)
    local = np.arange(len(f)) - np.repeat(np.cumsum(counts) - counts, counts)
    ix = lo_ij[f, 0] + local // ny[f]
    iy = lo_ij[f, 1] + local % ny[f]
    cells = ix * grid.shape[1] + iy
    rlo, rhi = grid.rects(cells)
    c = hull.centers[f]
    gap = np.maximum(np.maximum(rlo - c, c - rhi), 0.0)
    val = hull.times[f] - (gap * gap).sum(1)
    bound = np.full(grid.size, -np.inf)
    np.maximum.at(bound, cells, val)
    order = np.argsort(cells, kind="stable")
    ptr = np.searchsorted(cells[order], np.arange(grid.size + 1))
    out = _Bounds(hull, ring, bound, np.zeros(grid.size, bool), ptr, f[order])
    # a cell is inner when its four corners are inside the hull
    corners_lo, corners_hi = grid.rects(np.arange(grid.size))
    corners = [corners_lo, corners_hi, np.column_stack([corners_lo[:, 0], corners_hi[:, 1]]),
               np.column_stack([corners_hi[:, 0], corners_lo[:, 1]])]
    out.inner = np.all([out.inside(cn, margin=1e-9) for cn in corners], axis=0)
    return out


@dataclass
class Realization:
    """A sampled configuration around a window, optionally with its doubled twin."""

    window: Window
    plan: TruncationPlan
    seeds: SeedSet
    result: TessellationResult
    doubled_plan: TruncationPlan | None = None
    doubled_seeds: SeedSet | None = None
    doubled_result: TessellationResult | None = None
    index_map: np.ndarray | None = None
    safe: np.ndarray | None = None  # window seeds whose facets avoid omitted seeds
    info: dict = field(default_factory=dict)

    def window_mask(self, doubled: bool = False) -> np.ndarray:
        s = self.doubled_seeds if doubled else self.seeds
        return self.window.contains(s.positions)


def _inner_distance(pts: np.ndarray, box: Box, shrink: float) -> np.ndarray:
    """Signed distance to the boundary of ``box`` shrunk by ``shrink``, positive inside."""
    lo, hi = np.asarray(box.lo) + shrink, np.asarray(box.hi) - shrink
    return np.minimum((pts - lo).min(1), (hi - pts).min(1))


def _safe_seeds(result: TessellationResult, bounds: _Bounds, box: Box, shrink: float,
                omit_floor: float, idx: np.ndarray) -> np.ndarray:
    """Seeds among ``idx`` whose incident lower facets lie strictly below every omitted seed.

    Omitted seeds sit above ``omit_floor`` and either outside conv(layer) or
    within ``shrink`` of the boundary of ``box``.
    """
    hull = result.hull
    if len(hull.facets) == 0:
        return ~result.extreme[idx]
    mark = np.zeros(len(result), dtype=bool)
    mark[idx] = True
    near = np.flatnonzero(mark[hull.facets].any(axis=1))
    c = hull.centers[near]
    dist = np.minimum(bounds.boundary_distance(c), _inner_distance(c, box, shrink))
    reach = np.where(dist > 0, hull.times[near] - dist * dist, np.inf)
    bad = near[~(reach <= omit_floor)]
    if len(bad) == 0:
        return np.ones(len(idx), dtype=bool)
    bad_seed = np.zeros(len(result), dtype=bool)
    bad_seed[hull.facets[bad].ravel()] = True
    return ~(bad_seed[idx] & result.extreme[idx])


def _band_upper(grid: _Grid, box: Box, bounds: _Bounds, hi: float) -> np.ndarray:
    """Per grid cell, the largest time worth drawing; cells in the boundary strip get none."""
    rlo, rhi = grid.rects(np.arange(grid.size))
    deep = np.all((rlo >= np.asarray(box.lo) + STRIP) & (rhi <= np.asarray(box.hi) - STRIP), axis=1)
    return np.where(deep, np.minimum(bounds.cell_bound * (1 + _KEEP_SLACK) + _KEEP_SLACK, hi), -np.inf)


def _below_phi(bounds: _Bounds, pos: np.ndarray, h: np.ndarray, cells: np.ndarray) -> np.ndarray:
    phi = bounds.phi(pos, cells)
    return h < phi + _KEEP_SLACK * (1 + np.abs(np.where(np.isfinite(phi), phi, 0)))


def _shrink(grid: _Grid) -> float:
    # a cell outside the strip may still reach this far into it
    return STRIP + float(np.max(grid.step))


def _grid_for(box: Box) -> _Grid:
    return _Grid.over(box, 0.5 / math.sqrt(BASE_MASS))


def prune_configuration(S: SeedSet, h0: float, window: Window) -> tuple[np.ndarray, np.ndarray]:
    """Apply the sampler's pruning rule to a fully drawn configuration.

    Returns (keep, safe): the seeds the pruned sampler would have retained,
    and, among retained window seeds, those whose status the omission cannot
    affect.  Used to check the pruned sampler against full draws.
    """
    pos, h = S.positions, S.heights
    grid = _grid_for(S.box)
    layer = h <= h0
    b = _bounds(pos[layer], h[layer], grid)
    cells = grid.cell_of(pos)
    u = _band_upper(grid, S.box, b, float(S.time_range.hi))
    keep = layer | ((h <= u[cells]) & _below_phi(b, pos, h, cells))
    kept = S.subset(keep)
    res = tessellate(kept)
    win = np.flatnonzero(window.contains(kept.positions))
    safe = np.zeros(len(S), dtype=bool)
    safe[np.flatnonzero(keep)[win]] = _safe_seeds(res, b, S.box, _shrink(grid), h0, win)
    return keep, safe


def sample_realization(m: ModelParams, window: Window, plan: TruncationPlan, label: int,
                       doubled: bool = True, prune: bool = True) -> Realization:
    """Draw the configuration on ``plan.region(window)`` (and the doubled region).

    With ``prune=False`` every seed of the doubled region is drawn; the
    result is the same process, only slower, and serves as a reference.
    """
    gen = make_rng(label)
    plan2 = plan.doubled(m) if doubled else plan
    box1, box2 = plan.region(window), plan2.region(window)
    lo = plan.time_cutoff.lo
    hi1, hi2 = plan.time_cutoff.hi, plan2.time_cutoff.hi
    h0 = min(float(inverse_cumulative_mass(m, BASE_MASS)), hi1)
    g0 = float(cumulative_mass(m, h0))
    # bottom layer over the outer box
    count = int(gen.poisson(box2.volume * g0))
    a_pos = gen.uniform(box2.lo, box2.hi, size=(count, 2))
    a_h = sample_times(m, lo, h0, gen, count)
    grid = _grid_for(box2)
    in1 = box1.contains(a_pos)
    b1 = _bounds(a_pos[in1], a_h[in1], grid)
    b2 = _bounds(a_pos, a_h, grid) if doubled else b1
    # per-cell upper end of the band (h0, u]
    all_cells = np.arange(grid.size)
    rlo, rhi = grid.rects(all_cells)
    meets1 = np.all((rhi > box1.lo) & (rlo < box1.hi), axis=1)
    if prune:
        u1 = _band_upper(grid, box1, b1, hi1)
        u2 = _band_upper(grid, box2, b2, hi2) if doubled else np.full(grid.size, -np.inf)
    else:
        u1 = np.where(meets1, hi1, -np.inf)
        u2 = np.full(grid.size, hi2 if doubled else -np.inf)
    u = np.maximum(np.maximum(u1, u2), h0)
    shrink = _shrink(grid)
    area = np.prod(grid.step)
    mass = area * (cumulative_mass(m, u) - g0)
    counts = gen.poisson(np.maximum(mass, 0.0))
    cells = np.repeat(all_cells, counts)
    clo, chi = grid.rects(cells)
    band_pos = clo + gen.random((len(cells), 2)) * (chi - clo)
    band_pos = np.clip(band_pos, box2.lo, box2.hi)
    band_h = sample_times(m, h0, u[cells], gen, len(cells)) if len(cells) else np.empty(0)
    # membership in the two configurations
    keep1 = box1.contains(band_pos) & (band_h <= hi1)
    keep2 = band_h <= hi2 if doubled else np.zeros(len(band_h), bool)
    if prune:
        keep1 &= _below_phi(b1, band_pos, band_h, cells)
        if doubled:
            keep2 &= _below_phi(b2, band_pos, band_h, cells)
    pos1 = np.vstack([a_pos[in1], band_pos[keep1]])
    h1 = np.concatenate([a_h[in1], band_h[keep1]])
    tr1 = TimeRange(lo, hi1)
    S1 = SeedSet(pos1, h1, m, box1, tr1, label)
    res1 = tessellate(S1)
    win1 = np.flatnonzero(window.contains(pos1))
    safe1 = _safe_seeds(res1, b1, box1, shrink, h0, win1) if prune else np.ones(len(win1), bool)
    info = {"layer": int(count), "band": int(len(band_h)), "kept": int(keep1.sum()), "h0": h0}
    real = Realization(window, plan, S1, res1, info=info)
    real.safe = np.zeros(len(S1), dtype=bool)
    real.safe[win1] = safe1
    if not doubled:
        return real
    pos2 = np.vstack([a_pos, band_pos[keep2]])
    h2 = np.concatenate([a_h, band_h[keep2]])
    S2 = SeedSet(pos2, h2, m, box2, TimeRange(lo, hi2), label)
    res2 = tessellate(S2)
    # index of every seed of S1 inside S2 (-1: pruned there, hence not extreme)
    a_index = np.flatnonzero(in1)
    band_index2 = np.full(len(band_h), -1)
    band_index2[keep2] = count + np.arange(int(keep2.sum()))
    index_map = np.concatenate([a_index, band_index2[np.flatnonzero(keep1)]])
    win2 = np.flatnonzero(window.contains(pos2))
    safe2 = np.zeros(len(S2), dtype=bool)
    safe2[win2] = _safe_seeds(res2, b2, box2, shrink, h0, win2) if prune else True
    real.doubled_plan, real.doubled_seeds, real.doubled_result = plan2, S2, res2
    real.index_map = index_map
    real.info["kept_doubled"] = int(keep2.sum())
    # certification: nested comparison on the window seeds
    _certify_window(real, win1, safe1, safe2)
    return real


def _certify_window(real: Realization, win1: np.ndarray, safe1: np.ndarray, safe2: np.ndarray) -> None:
    res1, res2 = real.result, real.doubled_result
    j = real.index_map[win1]
    pruned = j < 0
    ok = np.zeros(len(win1), dtype=bool)
    present = ~pruned
    if np.any(present):
        ok[present] = certify(res1, res2, real.index_map, restrict=win1[present])
        ok[present] &= safe2[j[present]]
    # pruned from the doubled configuration: provably not extreme there
    ok[pruned] = ~res1.extreme[win1[pruned]]
    ok &= safe1
    res1.certified[:] = False
    res1.certified[win1] = ok
