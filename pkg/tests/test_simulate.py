import numpy as np
import pytest

from laguerre.model import ModelParams, Window, inverse_cumulative_mass
from laguerre.sampler import make_rng, sample_process, truncation_plan
from laguerre.simulate import BASE_MASS, prune_configuration, sample_realization
from laguerre.tessellation import tessellate


@pytest.mark.parametrize("model,n", [(ModelParams.gaussian(), 3.0), (ModelParams.beta_model(5.0), 3.0)])
def test_pruning_never_changes_safe_window_seeds(model, n):
    w = Window.of(n)
    plan = truncation_plan(model, w, 0.05)
    box = plan.region(w)
    h0 = min(float(inverse_cumulative_mass(model, BASE_MASS)), plan.time_cutoff.hi)
    for rep in range(2):
        S = sample_process(model, box, plan.time_cutoff, make_rng(100 + rep))
        full = tessellate(S)
        keep, safe = prune_configuration(S, h0, w)
        kept = tessellate(S.subset(keep))
        idx = np.flatnonzero(keep)
        win = w.contains(S.positions)
        # dropped window seeds are never extreme in the full configuration
        assert not np.any(win & ~keep & full.extreme)
        sw = safe[idx]
        assert np.array_equal(kept.extreme[sw], full.extreme[idx[sw]])
        assert np.allclose(kept.coverage_time[sw], full.coverage_time[idx[sw]])
        assert safe[win & keep].mean() > 0.9


def test_realization_is_deterministic_and_certified():
    m = ModelParams.gaussian()
    w = Window.of(3.0)
    plan = truncation_plan(m, w, 0.01)
    a = sample_realization(m, w, plan, label=7)
    b = sample_realization(m, w, plan, label=7)
    assert np.array_equal(a.seeds.positions, b.seeds.positions)
    assert np.array_equal(a.result.extreme, b.result.extreme)
    win = a.window_mask()
    assert a.result.certified[win].all()
    # the base configuration nests in the doubled one
    j = a.index_map
    present = j >= 0
    assert np.array_equal(a.doubled_seeds.positions[j[present]], a.seeds.positions[present])
    c = sample_realization(m, w, plan, label=8)
    assert not np.array_equal(a.seeds.heights[:5], c.seeds.heights[:5])
