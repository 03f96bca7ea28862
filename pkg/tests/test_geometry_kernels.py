import math

import numpy as np
import pytest

from laguerre.lp import Unbounded, chebyshev_radius, simplex_max
from laguerre.predicates import lifted_orient3d, orient2d


def test_orient2d_signs():
    assert orient2d((0, 0), (1, 0), (0, 1)) == 1
    assert orient2d((0, 0), (0, 1), (1, 0)) == -1
    assert orient2d((0, 0), (1, 1), (2, 2)) == 0


def test_orient2d_near_degenerate_is_exact():
    # c lies within rounding of the line through a and b; exact arithmetic decides
    a, b = (0.5, 0.5), (12.0, 12.0)
    for k in range(1, 50):
        c = (24.0, 24.0 + k * 2.0 ** -48)
        assert orient2d(a, b, c) == 1
        c = (24.0, 24.0 - k * 2.0 ** -48)
        assert orient2d(a, b, c) == -1
    assert orient2d(a, b, (24.0, 24.0)) == 0


def test_orient2d_broadcasts():
    c = np.array([[0.0, 1.0], [0.0, -1.0], [2.0, 0.0]])
    assert list(orient2d((0, 0), (1, 0), c)) == [1, -1, 0]


def test_lifted_orient3d_cocircular():
    # four cocircular centers with equal heights lie on one lifted plane
    v = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
    assert lifted_orient3d(v[0], 0.0, v[1], 0.0, v[2], 0.0, v[3], 0.0) == 0
    # raising the fourth seed puts it above the plane through the first three
    s_up = lifted_orient3d(v[0], 0.0, v[1], 0.0, v[2], 0.0, v[3], 1e-15)
    s_dn = lifted_orient3d(v[0], 0.0, v[1], 0.0, v[2], 0.0, v[3], -1e-15)
    assert s_up == -s_dn != 0


def test_simplex_small_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    val, x = simplex_max([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert val == pytest.approx(2.8) and np.allclose(x, [1.6, 1.2])
    with pytest.raises(Unbounded):
        simplex_max([1, 0], [[0, 1]], [1])


def test_chebyshev_radius():
    # unit square [-1, 1]^2: radius 1 at the origin
    A = [[1, 0], [-1, 0], [0, 1], [0, -1]]
    r, c = chebyshev_radius(A, [1, 1, 1, 1], cap=10.0)
    assert r == pytest.approx(1.0) and np.allclose(c, 0, atol=1e-12)
    # shifted square [2, 3] x [5, 6] (origin infeasible)
    r, c = chebyshev_radius(A, [3, -2, 6, -5], cap=10.0)
    assert r == pytest.approx(0.5) and np.allclose(c, [2.5, 5.5])
    # empty: x <= -1 and x >= 1
    r, _ = chebyshev_radius([[1, 0], [-1, 0]], [-1, -1])
    assert r < 0
    # halfplane: capped
    r, _ = chebyshev_radius([[1, 0]], [0.0], cap=3.0)
    assert r == 3.0
    # zero row with negative rhs: infeasible
    r, _ = chebyshev_radius([[0, 0]], [-1.0])
    assert r == -math.inf
