import math

import numpy as np
import pytest
from scipy import stats

from laguerre.errors import DivergentMassError, PreconditionError
from laguerre.model import Box, ModelParams, TimeRange, Window, cumulative_mass
from laguerre.sampler import (
    SeedSet,
    inverse_time_cdf,
    make_rng,
    sample_process,
    stream_label,
    truncation_plan,
)

UNIT = Box((0.0, 0.0), (1.0, 1.0))


def test_inverse_time_cdf_examples():
    assert inverse_time_cdf(ModelParams.beta_model(0.0), TimeRange(0.0, 1.0), 0.25) == pytest.approx(0.25)
    assert inverse_time_cdf(ModelParams.beta_prime(3.0), TimeRange(-math.inf, -1.0), 1.0) == pytest.approx(-1.0)
    assert inverse_time_cdf(ModelParams.gaussian(), TimeRange(-math.inf, 0.0), 1.0) == 0.0
    with pytest.raises(PreconditionError):
        inverse_time_cdf(ModelParams.gaussian(), TimeRange(-math.inf, 0.0), 1.5)
    with pytest.raises(DivergentMassError):
        inverse_time_cdf(ModelParams.beta_prime(3.0), TimeRange(-1.0, 0.0), 0.5)


@pytest.mark.parametrize("u", [0.01, 0.3, 0.77, 0.999])
def test_inverse_time_cdf_closed_forms(u):
    # closed forms from the normalized densities
    assert inverse_time_cdf(ModelParams.beta_model(2.0), TimeRange(0.0, 3.0), u) == pytest.approx(3 * u ** (1 / 3))
    assert inverse_time_cdf(ModelParams.beta_prime(4.0), TimeRange(-math.inf, -0.5), u) == pytest.approx(
        -0.5 * u ** (-1 / 3))
    assert inverse_time_cdf(ModelParams.gaussian(), TimeRange(-math.inf, 2.0), u) == pytest.approx(2 + math.log(u))


def test_empty_range_gives_empty_set():
    S = sample_process(ModelParams.beta_model(1.0), UNIT, TimeRange(-2.0, -1.0), make_rng(1))
    assert len(S) == 0 and S.positions.shape == (0, 2)


def test_same_label_same_seeds():
    m = ModelParams.gaussian()
    a = sample_process(m, UNIT.expanded(3.0), TimeRange(-math.inf, 1.0), 1234)
    b = sample_process(m, UNIT.expanded(3.0), TimeRange(-math.inf, 1.0), 1234)
    assert np.array_equal(a.positions, b.positions) and np.array_equal(a.heights, b.heights)
    assert a.rng_label == 1234


def test_stream_labels_are_distinct():
    labels = {stream_label(7, n, k) for n in range(5) for k in range(50)}
    assert len(labels) == 250


def test_beta_zero_mean_count():
    # expected count 3/(4 pi) on the unit square up to H = 1
    m = ModelParams.beta_model(0.0)
    gen = make_rng(99)
    counts = np.array([len(sample_process(m, UNIT, TimeRange(0.0, 1.0), gen)) for _ in range(20000)])
    se = math.sqrt(3 / (4 * math.pi) / len(counts))
    assert abs(counts.mean() - 3 / (4 * math.pi)) < 4 * se


def test_subbox_counts_are_independent_poisson():
    m = ModelParams.gaussian()
    gen = make_rng(5)
    tr = TimeRange(-math.inf, math.log(2.0))  # mass 2 on the unit square
    left, right = [], []
    for _ in range(10000):
        S = sample_process(m, UNIT, tr, gen)
        x = S.positions[:, 0]
        left.append(int(np.sum(x < 0.5)))
        right.append(int(np.sum(x >= 0.5)))
    left, right = np.array(left), np.array(right)
    # each half has mean 1: chi-square goodness of fit on {0, 1, 2, 3, >=4}
    for c in (left, right):
        obs = np.bincount(np.minimum(c, 4), minlength=5)
        p = stats.poisson.pmf(np.arange(4), 1.0)
        exp = len(c) * np.append(p, 1 - p.sum())
        assert stats.chisquare(obs, exp).pvalue > 1e-3
    assert abs(stats.pearsonr(left, right)[0]) < 4 / math.sqrt(len(left))


@pytest.mark.parametrize("m,tr", [
    (ModelParams.beta_model(5.0), TimeRange(0.0, 1.2)),
    (ModelParams.beta_prime(12.0), TimeRange(-math.inf, -0.9)),
    (ModelParams.gaussian(), TimeRange(-math.inf, 0.5)),
])
def test_time_marginal_ks(m, tr):
    S = sample_process(m, Box((0.0, 0.0), (1.0, 1.0)).expanded(50.0), tr, make_rng(11))
    h = S.heights[:100_000]
    assert len(h) > 5000
    lo = 0.0 if not math.isfinite(tr.lo) else float(cumulative_mass(m, tr.lo))
    span = float(cumulative_mass(m, tr.hi)) - lo
    assert stats.kstest(h, lambda t: (cumulative_mass(m, t) - lo) / span).pvalue > 1e-3


def test_seedset_round_trip(tmp_path):
    m = ModelParams.beta_model(5.0)
    S = sample_process(m, Box((-2.0, -2.0), (2.0, 2.0)), TimeRange(0.0, 1.5), 77)
    S.write(tmp_path / "s.csv")
    R = SeedSet.read(tmp_path / "s.csv")
    assert np.array_equal(R.positions, S.positions) and np.array_equal(R.heights, S.heights)
    assert R.model == S.model and R.box == S.box and R.time_range == S.time_range and R.rng_label == S.rng_label
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "x0,x1,h"


def test_truncation_plan_default_and_monotone():
    m = ModelParams.gaussian()
    w = Window.of(10.0)
    loose = truncation_plan(m, w, math.inf)
    assert loose.padding == 0.0
    plans = [truncation_plan(m, w, tol) for tol in (1e-1, 1e-2, 1e-3)]
    for a, b in zip(plans, plans[1:]):
        assert b.time_cutoff.hi >= a.time_cutoff.hi
        assert b.padding >= a.padding
    assert all(p.est_error <= tol for p, tol in zip(plans, (1e-1, 1e-2, 1e-3)))


def test_beta_cutoff_inverts_tail_form():
    m = ModelParams.beta_model(5.0)
    plan = truncation_plan(m, Window.of(4.0), 1e-2)
    H = plan.time_cutoff.hi
    # the cutoff sits where the unit-constant tail form is already below the tolerance
    assert math.exp(-max(H - 1, 0) ** (1 + 5 + 1)) <= 1e-2


def test_doubled_plan():
    m = ModelParams.beta_prime(12.0)
    p = truncation_plan(m, Window.of(3.0), 0.05)
    q = p.doubled(m)
    assert q.padding == 2 * p.padding and q.time_cutoff.hi == p.time_cutoff.hi / 2
