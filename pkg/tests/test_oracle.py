import math

import numpy as np
import pytest

from laguerre.errors import PreconditionError
from laguerre.fixtures import cluster_configuration
from laguerre.model import Box
from laguerre.oracle import GridSpec, grid_extreme_witness, naive_coverage_time, nearest_power_owner
from laguerre.sampler import SeedSet
from laguerre.tessellation import extreme_points, tessellate


def test_nearest_power_owner_examples():
    two = SeedSet.from_seeds([((0, 0), 0), ((2, 0), 0)])
    assert nearest_power_owner((1, 0), two) == {0, 1}
    assert nearest_power_owner((0.5, 0), two) == {0}
    shifted = SeedSet.from_seeds([((0, 0), 1), ((2, 0), 0)])
    # 0.25 + 1 vs 2.25 at x = 0.5, but 2.25 + 1 vs 0.25 at x = 1.5
    assert nearest_power_owner((0.5, 0), shifted) == {0}
    assert nearest_power_owner((1.5, 0), shifted) == {1}
    with pytest.raises(PreconditionError):
        nearest_power_owner((0, 0), SeedSet(np.empty((0, 2)), np.empty(0)))


def test_grid_witness_examples():
    S = SeedSet.from_seeds([((0, 0), 0), ((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, -1), 0)])
    g = GridSpec(Box((-2, -2), (2, 2)), 41)
    wit = grid_extreme_witness(S, g)
    assert all(w is not None for w in wit)
    assert np.allclose(wit[0], [0, 0])
    # a non-extreme seed never gets a witness
    B = cluster_configuration("B", 1 / 8)
    assert grid_extreme_witness(B, GridSpec.around(B, 257))[0] is None


def test_grid_refinement_is_monotone():
    rng = np.random.default_rng(11)
    for _ in range(20):
        k = int(rng.integers(3, 12))
        S = SeedSet(rng.uniform(0, 1, (k, 2)), rng.uniform(0, 0.2, k))
        g = GridSpec.around(S, 33)
        coarse = [w is not None for w in grid_extreme_witness(S, g)]
        fine = [w is not None for w in grid_extreme_witness(S, g.refined())]
        # refined grids keep every node, so a witness can only appear
        assert all(f or not c for c, f in zip(coarse, fine))
        flags = extreme_points(S)
        assert all(flags[i] for i in range(k) if fine[i])


def test_grid_spec_validation_and_refinement():
    g = GridSpec(Box((0, 0), (1, 1)), 3)
    assert g.nodes().shape == (9, 2)
    r = g.refined()
    assert r.resolution == 5
    assert {tuple(p) for p in g.nodes()} <= {tuple(p) for p in r.nodes()}
    with pytest.raises(PreconditionError):
        GridSpec(Box((0, 0), (1, 1)), 1)


def test_naive_coverage_examples():
    S = SeedSet.from_seeds([((0, 0), 0), ((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, -1), 0)])
    assert naive_coverage_time(0, S) == pytest.approx(0.5, abs=1e-4)
    two = SeedSet.from_seeds([((0, 0), 0), ((1, 0), 0)])
    assert naive_coverage_time(0, two) == math.inf
    assert naive_coverage_time(0, SeedSet.from_seeds([((0, 0), 0)])) == math.inf
    with pytest.raises(PreconditionError):
        naive_coverage_time(0, cluster_configuration("B", 1 / 8))


def test_naive_matches_exact_on_fixture():
    A = cluster_configuration("A", 1 / 8)
    res = tessellate(A)
    assert naive_coverage_time(0, A) == pytest.approx(res.coverage_time[0], abs=1e-4)
