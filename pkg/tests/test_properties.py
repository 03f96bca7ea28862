"""Property-based checks of geometric and statistical invariants."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from laguerre.model import Window
from laguerre.sampler import SeedSet
from laguerre.stats import f_n_count, normality_diagnostics
from laguerre.tessellation import extreme_points, is_extreme_lp, tessellate

coord = st.floats(-4, 4, allow_nan=False).map(lambda x: round(x, 3))
height = st.floats(0, 2, allow_nan=False).map(lambda x: round(x, 3))
seed_lists = st.lists(st.tuples(coord, coord, height), min_size=1, max_size=14,
                      unique_by=lambda s: (s[0], s[1]))
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _seeds(raw):
    a = np.array(raw, dtype=float)
    return SeedSet(a[:, :2], a[:, 2])


@SETTINGS
@given(seed_lists)
def test_hull_agrees_with_lp(raw):
    S = _seeds(raw)
    assert list(extreme_points(S)) == [is_extreme_lp(i, S) for i in range(len(S))]


@SETTINGS
@given(seed_lists, st.integers(-3, 3), st.integers(-3, 3), st.integers(-2, 2))
def test_translation_and_time_shift(raw, dx, dy, dh):
    S = _seeds(raw)
    base = tessellate(S)
    moved = tessellate(SeedSet(S.positions + [dx, dy], S.heights + dh))
    assert np.array_equal(base.extreme, moved.extreme)
    fin = np.isfinite(base.coverage_time)
    assert np.array_equal(fin, np.isfinite(moved.coverage_time))
    assert np.allclose(moved.coverage_time[fin], base.coverage_time[fin] + dh, atol=1e-9)


@SETTINGS
@given(seed_lists, st.tuples(coord, coord, height))
def test_adding_a_seed_is_monotone(raw, extra):
    S = _seeds(raw)
    if any(np.allclose(p, extra[:2]) for p in S.positions):
        return
    base = tessellate(S)
    more = tessellate(S.with_seeds([extra[:2]], [extra[2]]))
    k = len(S)
    # extremality can only be lost and coverage can only come earlier
    assert not np.any(more.extreme[:k] & ~base.extreme)
    assert np.all(more.coverage_time[:k] <= base.coverage_time + 1e-9)
    for i in np.flatnonzero(more.extreme[:k] & base.extreme & ~more.unbounded[:k]):
        for v in more.cell(int(i)).vertices:
            assert base.cell(int(i)).contains(v, tol=1e-8)


@SETTINGS
@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=20, unique=True), height)
def test_equal_heights_are_all_extreme(pts, h):
    S = SeedSet(np.array(pts, dtype=float), np.full(len(pts), h))
    assert extreme_points(S).all()


@SETTINGS
@given(seed_lists)
def test_far_sentinels_match_unbounded_flags(raw):
    S = _seeds(raw)
    res = tessellate(S)
    # a ring of distant seeds bounds every cell; cells whose vertices stay
    # within 150 of their center never reach it, and every originally
    # unbounded cell is then covered only very late
    ang = 2 * np.pi * np.arange(24) / 24
    ring = 400.0 * np.column_stack([np.cos(ang), np.sin(ang)])
    big = tessellate(S.with_seeds(ring, np.zeros(24)))
    k = len(S)
    bounded = res.extreme & ~res.unbounded
    assert np.all(big.extreme[:k] <= res.extreme)
    near = res.coverage_time - S.heights < 150.0 ** 2
    assert big.extreme[:k][bounded & near].all()
    keep = bounded & near
    assert np.allclose(big.coverage_time[:k][keep], res.coverage_time[keep], atol=1e-9)
    late = big.extreme[:k] & res.unbounded
    assert np.all(big.coverage_time[:k][late] > 100.0)


@SETTINGS
@given(seed_lists, st.floats(0.5, 3.0), st.floats(0.0, 2.0))
def test_window_count_monotone(raw, n, grow):
    res = tessellate(_seeds(raw))
    small = f_n_count(res, Window.of(n))[0]
    large = f_n_count(res, Window.of(n + grow))[0]
    assert small <= large <= int(res.extreme.sum())


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=30, max_size=80),
       st.floats(0.1, 10.0), st.floats(-5, 5), st.randoms(use_true_random=False))
def test_normality_affine_and_order_invariant(xs, a, b, rnd):
    x = np.array(xs)
    if x.std() < 1e-3:
        return
    d = normality_diagnostics(x)
    shuffled = list(x)
    rnd.shuffle(shuffled)
    for other in (a * x + b, np.array(shuffled)):
        e = normality_diagnostics(other)
        assert math.isclose(d[0], e[0], abs_tol=1e-9) and math.isclose(d[1], e[1], abs_tol=1e-9)
