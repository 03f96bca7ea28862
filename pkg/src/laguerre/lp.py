"""Small dense simplex solver for low-dimensional linear programs.

Only what the Chebyshev-center problem needs: maximise ``c . x`` over
``A x <= b, x >= 0`` with ``b >= 0`` (the origin is feasible, so a single
phase suffices).  Bland's rule guards against cycling on degenerate vertices.
"""

from __future__ import annotations

import math

import numpy as np

_PIVOT_TOL = 1e-12


class Unbounded(Exception):
    pass


def simplex_max(c, A, b, max_iter: int = 10_000) -> tuple[float, np.ndarray]:
    """Maximise ``c . x`` subject to ``A x <= b``, ``x >= 0`` with ``b >= 0``.

    Returns (optimal value, x).  Raises ``Unbounded`` when the objective is
    unbounded above.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        raise ValueError("simplex_max needs b >= 0")
    # tableau rows: [A | I | b], objective row: [-c | 0 | 0]
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        obj = T[m, :-1]
        scale = max(1.0, float(np.abs(obj).max()))
        entering = np.flatnonzero(obj < -_PIVOT_TOL * scale)
        if entering.size == 0:
            break
        col = int(entering[0])  # Bland: smallest index
        column = T[:m, col]
        pos = column > _PIVOT_TOL
        if not np.any(pos):
            raise Unbounded()
        ratios = np.full(m, math.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _PIVOT_TOL * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        T[row] /= T[row, col]
        others = np.arange(m + 1) != row
        T[others] -= np.outer(T[others, col], T[row])
        basis[row] = col
    else:
        raise RuntimeError("simplex did not converge")
    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    return float(T[m, -1]), x[:n]


def chebyshev_radius(A, b, cap: float = 1.0) -> tuple[float, np.ndarray | None]:
    """Radius of the largest ball inside ``{u : A u <= b}``, capped at ``cap``.

    Rows with a zero normal are checked directly: ``0 <= b`` is either always
    true (dropped) or never true (the set is empty).  Returns ``(-inf, None)``
    for an empty polyhedron, otherwise (radius, center).  A negative radius
    means the polyhedron is empty as well; zero means it has no interior.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.size == 0:
        return cap, None
    d = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    if np.any(b[zero] < 0):
        return -math.inf, None
    A, b, norms = A[~zero], b[~zero], norms[~zero]
    if len(b) == 0:
        return cap, np.zeros(d)
    A = A / norms[:, None]
    b = b / norms
    # r = r0 + s with s >= 0; r0 <= min(b) makes the origin feasible
    r0 = min(0.0, float(b.min()))
    # variables: u+ (d), u- (d), s
    rows = np.hstack([A, -A, np.ones((len(b), 1))])
    rhs = b - r0
    cap_row = np.zeros((1, 2 * d + 1))
    cap_row[0, -1] = 1.0
    rows = np.vstack([rows, cap_row])
    rhs = np.append(rhs, cap - r0)
    c = np.zeros(2 * d + 1)
    c[-1] = 1.0
    val, x = simplex_max(c, rows, rhs)
    return r0 + val, x[:d] - x[d:2 * d]
