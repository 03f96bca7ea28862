"""Adaptive-precision orientation predicates.

Each predicate evaluates the determinant in floating point first and accepts
the sign when it exceeds a conservative forward error bound; the remaining
cases are recomputed exactly with rationals built from the input doubles.
The lifted predicate takes seeds, not lifted points, so the rounding of
``|v|^2 + h`` never decides a sign.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

EPS = np.finfo(float).eps
# Generous multiple of the unit roundoff; exactness comes from the fallback.
_FILTER = 64 * EPS


def _orient2d_exact(a, b, c) -> int:
    ax, ay = (Fraction(float(t)) for t in a)
    bx, by = (Fraction(float(t)) for t in b)
    cx, cy = (Fraction(float(t)) for t in c)
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def orient2d(a, b, c) -> np.ndarray:
    """Sign of the signed area of triangle (a, b, c): +1 counterclockwise, -1 clockwise, 0 collinear.

    Arguments broadcast over leading axes; the last axis holds (x, y).
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (a, b, c)))
    l1 = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
    l2 = (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    det = l1 - l2
    bound = _FILTER * (np.abs(l1) + np.abs(l2))
    sign = np.array(np.sign(det), dtype=int)
    unsure = np.abs(det) <= bound
    if np.any(unsure):
        idx = np.argwhere(unsure)
        for k in map(tuple, idx):
            sign[k] = _orient2d_exact(a[k], b[k], c[k])
    return sign


def _lifted_exact(va, ha, vb, hb, vc, hc, vp, hp) -> int:
    pts = []
    for v, h in ((va, ha), (vb, hb), (vc, hc), (vp, hp)):
        x, y = Fraction(float(v[0])), Fraction(float(v[1]))
        pts.append((x, y, x * x + y * y + Fraction(float(h))))
    (ax, ay, az), rest = pts[0], pts[1:]
    (bx, by, bz), (cx, cy, cz), (px, py, pz) = [(x - ax, y - ay, z - az) for x, y, z in rest]
    det = px * (by * cz - bz * cy) - py * (bx * cz - bz * cx) + pz * (bx * cy - by * cx)
    return (det > 0) - (det < 0)


def lifted_orient3d(va, ha, vb, hb, vc, hc, vp, hp) -> np.ndarray:
    """Sign of det[b - a, c - a, p - a] for the lifted points (v, |v|^2 + h).

    For a triangle (a, b, c) with normal n = (b - a) x (c - a), the result is
    the sign of (p - a) . n.  Positions are (..., 2) arrays, heights (...,).
    """
    va, vb, vc, vp = (np.asarray(t, dtype=float) for t in (va, vb, vc, vp))
    ha, hb, hc, hp = (np.asarray(t, dtype=float) for t in (ha, hb, hc, hp))
    za, zb, zc, zp = ((v * v).sum(-1) + h for v, h in ((va, ha), (vb, hb), (vc, hc), (vp, hp)))
    bx, by, bz = vb[..., 0] - va[..., 0], vb[..., 1] - va[..., 1], zb - za
    cx, cy, cz = vc[..., 0] - va[..., 0], vc[..., 1] - va[..., 1], zc - za
    px, py, pz = vp[..., 0] - va[..., 0], vp[..., 1] - va[..., 1], zp - za
    m1, m2, m3 = by * cz - bz * cy, bx * cz - bz * cx, bx * cy - by * cx
    det = px * m1 - py * m2 + pz * m3
    # the z differences carry the rounding of |v|^2 + h, so bound them by magnitudes
    zb_, zc_, zp_ = np.abs(zb) + np.abs(za), np.abs(zc) + np.abs(za), np.abs(zp) + np.abs(za)
    perm = (
        np.abs(px) * (np.abs(by) * zc_ + zb_ * np.abs(cy))
        + np.abs(py) * (np.abs(bx) * zc_ + zb_ * np.abs(cx))
        + zp_ * (np.abs(bx) * np.abs(cy) + np.abs(by) * np.abs(cx))
    )
    sign = np.array(np.sign(det), dtype=int)
    unsure = ~(np.abs(det) > _FILTER * perm)
    if np.any(unsure):
        shape = sign.shape
        sign = sign.reshape(-1)
        flat = [np.broadcast_to(t, shape + (2,)).reshape(-1, 2) for t in (va, vb, vc, vp)]
        hs = [np.broadcast_to(t, shape).reshape(-1) for t in (ha, hb, hc, hp)]
        for k in np.flatnonzero(unsure.reshape(-1)):
            sign[k] = _lifted_exact(flat[0][k], hs[0][k], flat[1][k], hs[1][k],
                                    flat[2][k], hs[2][k], flat[3][k], hs[3][k])
        sign = sign.reshape(shape)
    return sign
