"""Laguerre tessellations through the lower convex hull of lifted seeds.

A seed (v, h) lifts to (v, |v|^2 + h).  Its Laguerre cell has nonempty
interior exactly when the lifted point is a strict vertex of the lower hull,
and the lower facets are dual to the cell vertices: the facet through seeds
a, b, c sits at the power center c_f, the point of equal power t_f for all
three.  Coverage times follow as the largest t_f around a seed.

The bulk hull comes from qhull; every decision that qhull could get wrong
by rounding (flat or reflex hull edges, coplanar points) is re-examined with
exact predicates and, when still tied, settled by the Chebyshev-center LP.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import PreconditionError
from .lp import chebyshev_radius
from .model import INF, Box, Seed, Window
from .predicates import lifted_orient3d, orient2d
from .sampler import SeedSet
from .serialize import atomic_write_text, encode_float, sig12

# Absolute inscribed radius below which a cell counts as having no interior.
TAU_GEOM = 1e-9
# Above this many seeds, ambiguous seeds are resolved with local constraints only.
_LOCAL_LP_THRESHOLD = 3000


def lift(x: Seed) -> np.ndarray:
    """Lifted point (v, |v|^2 + h)."""
    v = np.asarray(x.v, dtype=float)
    return np.append(v, v @ v + x.h)


def lift_points(positions, heights) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    return np.column_stack([positions, (positions * positions).sum(1) + np.asarray(heights, dtype=float)])


def _as_arrays(S) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(S, SeedSet):
        return S.positions, S.heights
    if isinstance(S, tuple) and len(S) == 2 and isinstance(S[0], np.ndarray):
        return S
    S = SeedSet.from_seeds(S)
    return S.positions, S.heights


# --- LP oracle -----------------------------------------------------------


def _cell_constraints(pos, h, i, others) -> tuple[np.ndarray, np.ndarray]:
    """Halfplanes a . u <= b of the cell of seed i, in coordinates u = w - v_i."""
    dv = pos[others] - pos[i]
    a = 2.0 * dv
    b = (dv * dv).sum(1) + h[others] - h[i]
    return a, b


def inscribed_radius(i: int, S, candidates=None) -> float:
    """Chebyshev radius of the cell of seed i (capped at 1, -inf when empty)."""
    pos, h = _as_arrays(S)
    if candidates is None:
        others = np.delete(np.arange(len(h)), i)
    else:
        others = np.setdiff1d(np.asarray(candidates, dtype=int), [i])
    if len(others) == 0:
        return 1.0
    a, b = _cell_constraints(pos, h, i, others)
    r, _ = chebyshev_radius(a, b, cap=1.0)
    return r


def is_extreme_lp(i: int, S, candidates=None) -> bool:
    """Extremeness of seed i from the Chebyshev-center LP of its cell."""
    return inscribed_radius(i, S, candidates) > TAU_GEOM


# --- exact low-dimensional hulls ------------------------------------------


def _cross_exact(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_chain_exact(pts: list[tuple[Fraction, Fraction]]) -> list[int]:
    """Indices of strict vertices of the lower hull of 2D points sorted by x."""
    chain: list[int] = []
    for k, p in enumerate(pts):
        while len(chain) >= 2 and _cross_exact(pts[chain[-2]], pts[chain[-1]], p) <= 0:
            chain.pop()
        chain.append(k)
    return chain


def strict_hull_vertices_2d(points) -> np.ndarray:
    """Strict vertices of the convex hull of 2D points, counterclockwise, exact."""
    pts = np.asarray(points, dtype=float)
    if len(pts) <= 2:
        return np.unique(np.arange(len(pts)))
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    frac = [(Fraction(float(pts[k, 0])), Fraction(float(pts[k, 1]))) for k in order]
    lower = _lower_chain_exact(frac)
    upper = _lower_chain_exact([(-x, -y) for x, y in frac[::-1]])
    n = len(frac)
    ring = [order[k] for k in lower[:-1]] + [order[n - 1 - k] for k in upper[:-1]]
    return np.array(ring, dtype=int)


# --- the hull computation --------------------------------------------------


@dataclass
class HullData:
    extreme: np.ndarray
    unbounded: np.ndarray
    coverage: np.ndarray
    facets: np.ndarray  # (F, 3) lower facets, counterclockwise in projection
    centers: np.ndarray  # (F, 2) power centers
    times: np.ndarray  # (F,) power at the centers
    neighbors: Adjacency | None = None
    repaired: np.ndarray | None = None


def _power_centers(pos, h, tri) -> tuple[np.ndarray, np.ndarray]:
    va, vb, vc = pos[tri[:, 0]], pos[tri[:, 1]], pos[tri[:, 2]]
    db, dc = vb - va, vc - va
    M = 2.0 * np.stack([db, dc], axis=1)
    rhs = np.stack([(db * db).sum(1) + h[tri[:, 1]] - h[tri[:, 0]],
                    (dc * dc).sum(1) + h[tri[:, 2]] - h[tri[:, 0]]], axis=1)
    u = np.linalg.solve(M, rhs[..., None])[..., 0] if len(tri) else np.empty((0, 2))
    return va + u, (u * u).sum(1) + h[tri[:, 0]]


class Adjacency:
    """Seed adjacency in compressed rows: ``adj[i]`` lists the neighbors of i."""

    def __init__(self, n: int, pairs: np.ndarray):
        pairs = np.unique(np.asarray(pairs, dtype=int).reshape(-1, 2), axis=0)
        self.ptr = np.searchsorted(pairs[:, 0], np.arange(n + 1))
        self.idx = pairs[:, 1]

    @classmethod
    def from_lists(cls, lists) -> "Adjacency":
        pairs = [(k, int(j)) for k, row in enumerate(lists) for j in row]
        return cls(len(lists), np.array(pairs, dtype=int).reshape(-1, 2))

    def __getitem__(self, i: int) -> np.ndarray:
        return self.idx[self.ptr[i]:self.ptr[i + 1]]

    def __len__(self) -> int:
        return len(self.ptr) - 1


def _neighbors_from_facets(n: int, facets: np.ndarray) -> Adjacency:
    e = np.concatenate([facets[:, [0, 1]], facets[:, [1, 2]], facets[:, [2, 0]]])
    return Adjacency(n, np.concatenate([e, e[:, ::-1]]))


def _on_hull_boundary(pos: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Whether pos[idx] lies on the boundary of conv(pos) (pos not collinear)."""
    hull = ConvexHull(pos)
    ring = pos[hull.vertices]  # counterclockwise in 2D
    a, b = ring, np.roll(ring, -1, axis=0)
    s = orient2d(a[None, :, :], b[None, :, :], pos[idx][:, None, :])
    return np.any(s <= 0, axis=1)


def _local_candidates(i: int, pos: np.ndarray, neighbors: list, rings: int = 3) -> np.ndarray:
    seen = {i}
    frontier = {i}
    for _ in range(rings):
        nxt = set()
        for k in frontier:
            nxt.update(int(j) for j in neighbors[k])
        frontier = nxt - seen
        seen |= nxt
    # add seeds close to i in space as a safety margin
    cand = np.fromiter(seen, dtype=int)
    if len(cand) > 1:
        rad = np.max(np.linalg.norm(pos[cand] - pos[i], axis=1))
        near = np.flatnonzero(np.linalg.norm(pos - pos[i], axis=1) <= rad)
        cand = np.union1d(cand, near)
    return cand


def lower_hull(positions, heights) -> HullData:
    """Extreme flags, lower facets, power centers and coverage times (d = 2)."""
    pos = np.asarray(positions, dtype=float)
    h = np.asarray(heights, dtype=float)
    n = len(h)
    if n == 0:
        raise PreconditionError("extreme-point detection needs at least one seed")
    if pos.shape[1] != 2:
        raise PreconditionError("the hull path needs d = 2; use is_extreme_lp for other dimensions")
    extreme = np.zeros(n, dtype=bool)
    # only the lowest seed of a repeated center can form a cell
    order = np.lexsort((np.arange(n), h, pos[:, 1], pos[:, 0]))
    p_sorted = pos[order]
    first = np.ones(n, dtype=bool)
    first[1:] = np.any(p_sorted[1:] != p_sorted[:-1], axis=1)
    uid = np.sort(order[first])
    empty_facets = np.empty((0, 3), dtype=int)

    def trivial(ext_idx, neighbors):
        extreme[ext_idx] = True
        cov = np.where(extreme, INF, -INF)
        return HullData(extreme, extreme.copy(), cov, empty_facets, np.empty((0, 2)), np.empty(0),
                        Adjacency.from_lists(neighbors))

    if len(uid) <= 2:
        nb = [np.setdiff1d(uid, [k]) if k in uid else np.empty(0, dtype=int) for k in range(n)]
        return trivial(uid, nb)
    P, H = pos[uid], h[uid]
    far = int(np.argmax(((P - P[0]) ** 2).sum(1)))
    if np.all(orient2d(P[0], P[far], P) == 0):
        return trivial(*_collinear_hull(P, H, uid, n))
    ctr = P.mean(0)
    Q = P - ctr
    lifted = np.column_stack([Q, (Q * Q).sum(1) + H])
    try:
        hull = ConvexHull(lifted, qhull_options="Qc")
    except QhullError:
        # all lifted points coplanar: only corners of conv(centers) keep a cell
        ring = strict_hull_vertices_2d(P)
        nb = [np.empty(0, dtype=int) for _ in range(n)]
        for k in range(len(ring)):
            nb[uid[ring[k]]] = uid[[ring[k - 1], ring[(k + 1) % len(ring)]]]
        return trivial(uid[ring], nb)
    return _hull_path(pos, h, uid, hull, extreme)


def _collinear_hull(P, H, uid, n):
    spread = P.max(0) - P.min(0)
    ax = int(np.argmax(spread))
    order = np.argsort(P[:, ax], kind="stable")
    pts = []
    for k in order:
        x, y = Fraction(float(P[k, 0])), Fraction(float(P[k, 1]))
        pts.append((x if ax == 0 else y, x * x + y * y + Fraction(float(H[k]))))
    chain = [order[k] for k in _lower_chain_exact(pts)]
    nb = [np.empty(0, dtype=int) for _ in range(n)]
    for k, c in enumerate(chain):
        nb[uid[c]] = uid[[chain[j] for j in (k - 1, k + 1) if 0 <= j < len(chain)]]
    return uid[chain], nb


def _hull_path(pos, h, uid, hull, extreme) -> HullData:
    n = len(h)
    eq = hull.equations
    simp = uid[hull.simplices]
    P = pos[simp]
    area = orient2d(P[:, 0], P[:, 1], P[:, 2])
    lower = (eq[:, 2] < 0) & (area != 0)
    ambiguous = np.zeros(n, dtype=bool)
    # near-vertical facets sit over the boundary of conv(centers); let the LP look
    nearly_vertical = np.abs(eq[:, 2]) < 1e-10
    ambiguous[simp[nearly_vertical].ravel()] = True
    tri = simp[lower].copy()
    flip = area[lower] < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    # start each triangle at its smallest index, so a facet's power center is
    # computed identically whatever else is in the configuration
    shift = np.argmin(tri, axis=1)
    tri = np.take_along_axis(tri, (shift[:, None] + np.arange(3)) % 3, axis=1)
    extreme[np.unique(tri)] = True
    # exact convexity of every interior edge of the lower hull
    if len(tri):
        edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        fid = np.concatenate([np.arange(len(tri))] * 3)
        opp = np.concatenate([tri[:, 2], tri[:, 0], tri[:, 1]])
        key = np.sort(edges, axis=1)
        order = np.lexsort((key[:, 1], key[:, 0]))
        key, fid, opp = key[order], fid[order], opp[order]
        same = np.all(key[1:] == key[:-1], axis=1)
        j = np.flatnonzero(same)
        f1, d2 = fid[j], opp[j + 1]
        t = tri[f1]
        s = lifted_orient3d(pos[t[:, 0]], h[t[:, 0]], pos[t[:, 1]], h[t[:, 1]],
                            pos[t[:, 2]], h[t[:, 2]], pos[d2], h[d2])
        bad = s <= 0
        if np.any(bad):
            ambiguous[t[bad].ravel()] = True
            ambiguous[d2[bad]] = True
    # qhull "coplanar" points: within rounding of a facet, status undecided
    if len(hull.coplanar):
        cp = hull.coplanar
        near_lower = (eq[cp[:, 1], 2] < 0) | nearly_vertical[cp[:, 1]]
        ambiguous[uid[cp[near_lower, 0]]] = True
        ambiguous[simp[cp[near_lower, 1]].ravel()] = True
    centers, times = _power_centers(pos, h, tri)
    neighbors = _neighbors_from_facets(n, tri)
    repaired = np.zeros(n, dtype=bool)
    if np.any(ambiguous):
        for i in np.flatnonzero(ambiguous):
            cand = None
            if n > _LOCAL_LP_THRESHOLD:
                cand = _local_candidates(int(i), pos, neighbors)
            flag = is_extreme_lp(int(i), (pos, h), cand)
            if flag != extreme[i]:
                repaired[i] = True
            extreme[i] = flag
    coverage = np.full(n, -INF)
    if len(tri):
        for k in range(3):
            np.maximum.at(coverage, tri[:, k], times)
    coverage[~extreme] = -INF
    unbounded = np.zeros(n, dtype=bool)
    ext_idx = np.flatnonzero(extreme)
    unbounded[ext_idx] = _on_hull_boundary(pos[uid], np.searchsorted(uid, ext_idx))
    coverage[unbounded] = INF
    data = HullData(extreme, unbounded, coverage, tri, centers, times, neighbors, repaired)
    if np.any(repaired):
        _repair(pos, h, data)
    return data


def _repair(pos, h, data: HullData) -> None:
    """Recompute coverage times around seeds whose status the LP overturned."""
    n = len(h)
    S = SeedSet(pos, h)
    touched = set()
    for i in np.flatnonzero(data.repaired):
        touched.add(int(i))
        touched.update(int(j) for j in data.neighbors[i])
    for i in sorted(touched):
        if not data.extreme[i]:
            data.coverage[i] = -INF
            continue
        cand = None if n <= _LOCAL_LP_THRESHOLD else _local_candidates(i, pos, data.neighbors, rings=4)
        cell = cell_polytope(i, S, candidates=cand)
        data.unbounded[i] = cell.kind == "unbounded"
        data.coverage[i] = _coverage_from_cell(cell, pos[i], h[i])


# --- cells -----------------------------------------------------------------


@dataclass
class Cell:
    """Laguerre cell in the plane.

    ``kind`` is "empty", "bounded" or "unbounded".  ``vertices`` are the finite
    vertices in counterclockwise order; unbounded cells also carry ``rays`` as
    (origin, unit direction) pairs.  ``lines`` holds the supporting halfplanes
    a . w <= b that define the cell, so it can be clipped to any box.
    """

    kind: str
    vertices: np.ndarray
    rays: list = field(default_factory=list)
    lines: tuple = (np.empty((0, 2)), np.empty(0))

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    def clip(self, box: Box) -> np.ndarray:
        """Polygon of the cell intersected with ``box`` (counterclockwise)."""
        if self.is_empty:
            return np.empty((0, 2))
        poly = _box_polygon(np.asarray(box.lo), np.asarray(box.hi))
        a, b = self.lines
        for k in range(len(b)):
            poly = _clip(poly, a[k], b[k], k)
            if poly is None:
                return np.empty((0, 2))
        return np.array([p for p, _ in poly])

    def contains(self, w, tol: float = 1e-9) -> bool:
        a, b = self.lines
        if self.is_empty:
            return False
        return bool(np.all(a @ np.asarray(w, dtype=float) <= b + tol * (1 + np.abs(b))))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": [[sig12(c) for c in p] for p in self.vertices],
            "rays": [{"origin": [sig12(c) for c in o], "direction": [sig12(c) for c in u]} for o, u in self.rays],
        }


def _box_polygon(lo, hi):
    corners = [(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])]
    # edge k runs from corner k to corner k+1; box lines have negative ids
    return [(np.array(c, dtype=float), -(k + 1)) for k, c in enumerate(corners)]


def _clip(poly, a, b, lid):
    """Clip a convex polygon [(vertex, id of the edge leaving it)] by a . w <= b."""
    pts = np.array([p for p, _ in poly])
    side = pts @ a - b
    tol = 1e-12 * (np.abs(pts) @ np.abs(a) + abs(b) + 1e-300)
    inside = side <= tol
    if not np.any(inside):
        return None
    if np.all(inside):
        return poly
    out = []
    m = len(poly)
    for k in range(m):
        (p, e), q_k = poly[k], (k + 1) % m
        sp, sq = side[k], side[q_k]
        p_in, q_out = sp <= tol[k], sq > tol[q_k]
        if p_in:
            if q_out and sp >= -tol[k]:
                out.append((p, lid))
                continue
            out.append((p, e))
            if q_out:
                out.append((_cross_point(p, pts[q_k], a, b), lid))
        elif sq < -tol[q_k]:
            out.append((_cross_point(p, pts[q_k], a, b), e))
    if len(out) < 3:
        return None
    return out


def _cross_point(p, q, a, b):
    sp, sq = p @ a - b, q @ a - b
    t = sp / (sp - sq)
    return p + t * (q - p)


def _line_vertices(poly, lines_a, lines_b):
    """Recompute each vertex as the intersection of its two supporting lines."""
    m = len(poly)
    out = []
    for k in range(m):
        e_in, e_out = poly[k - 1][1], poly[k][1]
        if e_in >= 0 and e_out >= 0 and e_in != e_out:
            M = np.array([lines_a[e_in], lines_a[e_out]])
            rhs = np.array([lines_b[e_in], lines_b[e_out]])
            try:
                out.append((np.linalg.solve(M, rhs), e_in, e_out))
                continue
            except np.linalg.LinAlgError:
                pass
        out.append((poly[k][0], e_in, e_out))
    return out


def _is_unbounded(pos, i, others) -> bool:
    """Exact test: the directions v_j - v_i leave an angular gap of at least pi."""
    d = pos[others] - pos[i]
    d = d[np.any(d != 0, axis=1)]
    if len(d) == 0:
        return True
    ang = np.sort(np.arctan2(d[:, 1], d[:, 0]))
    order = np.argsort(np.arctan2(d[:, 1], d[:, 0]), kind="stable")
    d = d[order]
    gaps = np.diff(np.append(ang, ang[0] + 2 * math.pi))
    k = int(np.argmax(gaps))
    if gaps[k] > math.pi + 1e-6:
        return True
    if gaps[k] < math.pi - 1e-6:
        return False
    u1, u2 = d[k], d[(k + 1) % len(d)]
    if len(d) == 1:
        return True
    return int(orient2d((0.0, 0.0), u1, u2)) <= 0


def cell_polytope(i: int, S, candidates=None) -> Cell:
    """Cell C(x_i, S) as an intersection of halfplanes (d = 2)."""
    pos, h = _as_arrays(S)
    if pos.shape[1] != 2:
        raise PreconditionError("cell geometry is implemented for d = 2")
    n = len(h)
    others = np.delete(np.arange(n), i) if candidates is None else np.setdiff1d(candidates, [i])
    a, b = _cell_constraints(pos, h, i, others)
    zero = np.all(a == 0, axis=1)
    if np.any(b[zero] < 0):
        return Cell("empty", np.empty((0, 2)))
    a, b = a[~zero], b[~zero]
    if len(b) == 0:
        return Cell("unbounded", np.empty((0, 2)), [], (a + 0.0, b + 0.0))
    radius, center = chebyshev_radius(a, b, cap=1.0)
    if not radius > TAU_GEOM:
        return Cell("empty", np.empty((0, 2)))
    unbounded = _is_unbounded(pos, i, others)
    L = 4.0 * (1.0 + float(np.max(np.abs(b - a @ center) / np.linalg.norm(a, axis=1))))
    for _ in range(200):
        poly = _box_polygon(center - L, center + L)
        for k in range(len(b)):
            poly = _clip(poly, a[k], b[k], k)
            if poly is None:
                break
        if poly is not None:
            verts = _line_vertices(poly, a, b)
            if _complete(verts, a, unbounded):
                break
        L *= 4.0
    else:
        raise RuntimeError(f"cell {i} did not stabilise while growing the clipping box")
    used = sorted({e for _, e1, e2 in verts for e in (e1, e2) if e >= 0})
    lines = (a[used] + 0.0, b[used] + 0.0)
    shifted = (lines[0], lines[1] + lines[0] @ pos[i])
    m = len(verts)
    is_finite = [e1 >= 0 and e2 >= 0 for _, e1, e2 in verts]
    # start the vertex chain right after the run of box vertices
    start = next((k for k in range(m) if is_finite[k] and not is_finite[k - 1]), 0)
    verts = verts[start:] + verts[:start]
    is_finite = is_finite[start:] + is_finite[:start]
    vertices = np.array([p + pos[i] for (p, _, _), f in zip(verts, is_finite) if f]).reshape(-1, 2)
    if not unbounded:
        return Cell("bounded", vertices, [], shifted)
    rays = []
    # rays leave along real edges that run into the box
    for k in range(m):
        (p, _, e_out), (q, _, _) = verts[k], verts[(k + 1) % m]
        if e_out < 0:
            continue
        u = (q - p) / np.linalg.norm(q - p)
        if is_finite[k] and not is_finite[(k + 1) % m]:
            rays.append((p + pos[i], u))
        elif not is_finite[k] and is_finite[(k + 1) % m]:
            rays.append((q + pos[i], -u))
        elif not is_finite[k] and not is_finite[(k + 1) % m]:
            # a whole line: two rays from the point nearest to the nucleus
            foot = a[e_out] * b[e_out] / (a[e_out] @ a[e_out])
            rays.extend([(foot + pos[i], u), (foot + pos[i], -u)])
    return Cell("unbounded", vertices, rays, shifted)


def _complete(verts, a, unbounded: bool) -> bool:
    """No cell vertex was lost outside the clipping box.

    Bounded cells must not touch the box at all.  Unbounded cells meet it in
    a single run of box edges, except strips between two parallel lines.
    """
    m = len(verts)
    runs = sum(1 for k in range(m) if verts[k][1] < 0 and verts[k - 1][1] >= 0)
    if not unbounded:
        return runs == 0
    if runs <= 1:
        return True
    real = sorted({e for _, e1, e2 in verts for e in (e1, e2) if e >= 0})
    finite = [1 for _, e1, e2 in verts if e1 >= 0 and e2 >= 0]
    if runs == 2 and not finite and len(real) == 2:
        return int(orient2d((0.0, 0.0), a[real[0]], a[real[1]])) == 0
    return False


def _coverage_from_cell(cell: Cell, v, h) -> float:
    if cell.kind == "empty":
        return -INF
    if cell.kind == "unbounded":
        return INF
    d = cell.vertices - np.asarray(v)
    return float(h + np.max((d * d).sum(1)))


# --- public per-seed operations ---------------------------------------------


def extreme_points(S) -> np.ndarray:
    """Per-seed flags: True where the Laguerre cell has nonempty interior (d = 2)."""
    pos, h = _as_arrays(S)
    return lower_hull(pos, h).extreme


def coverage_time(i: int, S) -> float:
    """Last growth time of the cell of seed i: -inf if empty, +inf if unbounded."""
    pos, h = _as_arrays(S)
    return float(lower_hull(pos, h).coverage[i])


def sphere_coverage_witness(i: int, S, t: float, angular_resolution: int = 4096):
    """A direction angle on the sphere of radius sqrt(t - h_i) not yet covered by
    other growing cells at time t, or None if every probed direction is covered.

    Directions are probed on a uniform grid and then refined by a bounded
    one-dimensional maximisation around the most exposed grid directions.
    """
    pos, h = _as_arrays(S)
    if pos.shape[1] != 2:
        raise PreconditionError("sphere coverage check is implemented for d = 2")
    if t < h[i]:
        raise PreconditionError("sphere coverage check needs t >= h_i")
    others = np.delete(np.arange(len(h)), i)
    if len(others) == 0:
        return 0.0
    vo, ho = pos[others], h[others]
    r = math.sqrt(t - h[i])

    def exposure(theta):
        theta = np.atleast_1d(theta)
        w = pos[i] + r * np.column_stack([np.cos(theta), np.sin(theta)])
        diff = w[:, None, :] - vo[None, :, :]
        return (diff * diff).sum(-1).__add__(ho).min(axis=1) - t

    theta = 2 * math.pi * np.arange(angular_resolution) / angular_resolution
    g = exposure(theta)
    if np.any(g > 0):
        return float(theta[int(np.argmax(g))])
    # zoom in around the most exposed grid directions
    centers = theta[np.argsort(g)[::-1][:8]]
    half = 2 * math.pi / angular_resolution
    offsets = np.linspace(-1.0, 1.0, 33)
    for _ in range(8):
        cand = (centers[:, None] + half * offsets[None, :]).ravel()
        gc = exposure(cand).reshape(len(centers), -1)
        if np.any(gc > 0):
            k = int(np.argmax(gc))
            return float(cand[k] % (2 * math.pi))
        centers = cand.reshape(len(centers), -1)[np.arange(len(centers)), np.argmax(gc, axis=1)]
        half /= 12.0
    return None


def sphere_coverage_check(i: int, S, t: float, angular_resolution: int = 4096) -> bool:
    """True when the sphere around v_i at time t is covered by other cells."""
    return sphere_coverage_witness(i, S, t, angular_resolution) is None


def stabilization_region_contains(center: Seed, T: float, query: Seed, window: Window) -> bool:
    """Membership of ``query`` in the stabilization region D(center, T)."""
    if T <= center.h or not bool(window.contains(np.asarray(center.v))[0]):
        return False
    if query.h > T:
        return False
    if math.isinf(T):
        return True
    dist = math.dist(center.v, query.v)
    return math.sqrt(T - center.h) + math.sqrt(T - query.h) >= dist


def paraboloid_empty(w, t: float, S) -> bool:
    """No seed lies in the closed downward paraboloid h' <= t - |w - v'|^2."""
    if len(S) == 0:
        return True
    pos, h = _as_arrays(S)
    diff = pos - np.asarray(w, dtype=float)
    return bool(np.all(h > t - (diff * diff).sum(1)))


# --- whole tessellations -----------------------------------------------------


@dataclass
class TessellationResult:
    seeds: SeedSet
    extreme: np.ndarray
    coverage_time: np.ndarray
    unbounded: np.ndarray
    certified: np.ndarray
    hull: HullData
    _cells: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.extreme)

    def kind(self, i: int) -> str:
        if not self.extreme[i]:
            return "empty"
        return "unbounded" if self.unbounded[i] else "bounded"

    def cell(self, i: int) -> Cell:
        if i not in self._cells:
            if not self.extreme[i]:
                self._cells[i] = Cell("empty", np.empty((0, 2)))
            else:
                n = len(self)
                cand = None
                if n > 64:
                    cand = _local_candidates(i, self.seeds.positions, self.hull.neighbors, rings=2)
                self._cells[i] = cell_polytope(i, self.seeds, candidates=cand)
        return self._cells[i]

    @property
    def cells(self) -> list[Cell]:
        return [self.cell(i) for i in range(len(self))]

    def to_dict(self, window: Window | None = None, geometry: bool = True) -> dict:
        pos, h = self.seeds.positions, self.seeds.heights
        idx = range(len(self)) if window is None else np.flatnonzero(window.contains(pos))
        records = []
        for i in idx:
            i = int(i)
            rec = {
                "index": i,
                "v": [float(c) for c in pos[i]],
                "h": float(h[i]),
                "extreme": bool(self.extreme[i]),
                "certified": bool(self.certified[i]),
                "coverage_time": encode_float(self.coverage_time[i]),
                "kind": self.kind(i),
            }
            if geometry:
                c = self.cell(i).to_dict()
                rec["vertices"], rec["rays"] = c["vertices"], c["rays"]
            records.append(rec)
        return {
            "seeds": self.seeds.metadata(),
            "window": None if window is None else {"n": window.n, "center": list(window.center)},
            "extreme_count": int(self.extreme.sum()),
            "cells": records,
        }

    def write(self, path, window: Window | None = None) -> Path:
        return atomic_write_text(path, json.dumps(self.to_dict(window), indent=1) + "\n")


def tessellate(S: SeedSet) -> TessellationResult:
    """Extreme flags, coverage times and (lazy) cells of a planar seed set.

    Hand-built seed sets are complete configurations, so every seed is
    certified.  Sampled sets start uncertified; see ``certify``.
    """
    if len(S) == 0:
        raise PreconditionError("cannot tessellate an empty seed set")
    data = lower_hull(S.positions, S.heights)
    cert = np.full(len(S), S.is_complete)
    return TessellationResult(S, data.extreme, data.coverage, data.unbounded, cert, data)


def certify(base: TessellationResult, bigger: TessellationResult, index_map, tol: float = 1e-7,
            geometry: bool = False, restrict=None) -> np.ndarray:
    """Mark seeds of ``base`` whose status survives in a larger configuration.

    ``index_map[i]`` is the index of base seed i inside ``bigger`` (or -1 when
    the seed is absent there).  A seed is certified when its extreme flag and
    coverage time (within ``tol`` relative to max(1, |T|)) agree and, with
    ``geometry``, its cell vertices agree within ``tol``.
    """
    index_map = np.asarray(index_map, dtype=int)
    idx = np.arange(len(base)) if restrict is None else np.asarray(restrict, dtype=int)
    j = index_map[idx]
    present = j >= 0
    ok = np.zeros(len(idx), dtype=bool)
    jj = np.where(present, j, 0)
    same_flag = base.extreme[idx] == bigger.extreme[jj]
    t1, t2 = base.coverage_time[idx], bigger.coverage_time[jj]
    both_inf = (np.isinf(t1) & np.isinf(t2) & (np.sign(t1) == np.sign(t2)))
    with np.errstate(invalid="ignore"):
        close = np.abs(t1 - t2) <= tol * np.maximum(1.0, np.abs(t1))
    ok = present & same_flag & (both_inf | close)
    if geometry:
        for k in np.flatnonzero(ok):
            i = int(idx[k])
            if not base.extreme[i]:
                continue
            c1, c2 = base.cell(i), bigger.cell(int(j[k]))
            if c1.vertices.shape != c2.vertices.shape:
                ok[k] = False
                continue
            if len(c1.vertices):
                dists = np.linalg.norm(c1.vertices[:, None] - c2.vertices[None], axis=-1)
                ok[k] = bool(np.all(dists.min(axis=1) <= tol * (1 + np.abs(c1.vertices).max())))
    base.certified[idx] = ok
    return ok
