import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from laguerre.errors import DivergentMassError, ModelError
from laguerre.model import (
    Family,
    ModelParams,
    Seed,
    TimeRange,
    Window,
    cumulative_mass,
    intensity_constant,
    inverse_cumulative_mass,
    power,
    time_density,
    total_mass,
)


def exact_gamma(x: Fraction) -> float:
    """Gamma at positive integers and half-integers from the factorial identities."""
    if x.denominator == 1:
        return float(math.factorial(int(x) - 1))
    assert x.denominator == 2
    n = int(x - Fraction(1, 2))
    return math.factorial(2 * n) / (4 ** n * math.factorial(n)) * math.sqrt(math.pi)


# (d, beta) pairs whose Gamma arguments are all integers or half-integers
BETA_TABLE = [(2, 0), (2, 1), (2, 2), (2, 5), (1, 0), (1, 3), (3, 1), (3, 4), (4, 0), (4, 2)]
PRIME_TABLE = [(2, 3), (2, 4), (2, 12), (1, 2), (1, 5), (3, 3), (3, 6), (4, 4), (4, 7), (2, 7)]


@pytest.mark.parametrize("d,beta", BETA_TABLE)
def test_beta_constant_against_tabulated_gamma(d, beta):
    num = exact_gamma(Fraction(d, 2) + beta + Fraction(3, 2))
    den = math.pi ** ((d + 1) / 2) * exact_gamma(Fraction(beta + 1))
    got = intensity_constant(ModelParams.beta_model(beta, d=d))
    assert got == pytest.approx(num / den, rel=1e-12)


@pytest.mark.parametrize("d,beta", PRIME_TABLE)
def test_beta_prime_constant_against_tabulated_gamma(d, beta):
    num = exact_gamma(Fraction(beta))
    den = math.pi ** ((d + 1) / 2) * exact_gamma(Fraction(beta) - Fraction(d + 1, 2))
    got = intensity_constant(ModelParams.beta_prime(beta, d=d))
    assert got == pytest.approx(num / den, rel=1e-12)


def test_constant_examples():
    assert intensity_constant(ModelParams.beta_model(0.0)) == pytest.approx(3 / (4 * math.pi), rel=1e-12)
    assert intensity_constant(ModelParams.beta_prime(3.0)) == pytest.approx(4 / math.pi ** 2, rel=1e-12)
    assert intensity_constant(ModelParams.gaussian()) == 1.0


def test_power_examples():
    assert power((0, 0), Seed((0, 0), 5)) == 5
    assert power((1, 0), Seed((0, 0), 2)) == 3
    assert power((3, 4), Seed((0, 0), -1)) == 24
    with pytest.raises(ModelError):
        power((1, 2, 3), Seed((0, 0), 0))


def test_parameter_validation():
    with pytest.raises(ModelError):
        ModelParams.beta_model(-1.0)
    with pytest.raises(ModelError):
        ModelParams.beta_prime(2.0)  # needs beta > d/2 + 1 = 2
    with pytest.raises(ModelError):
        ModelParams.beta_model(1.0, gamma=0.0)
    with pytest.raises(ModelError):
        ModelParams(Family.GAUSSIAN, beta=1.0)
    with pytest.raises(ModelError):
        Seed((0.0, math.inf), 0.0)
    with pytest.raises(ModelError):
        Window(0.0)
    with pytest.raises(ModelError):
        TimeRange(1.0, 1.0)


def test_density_examples():
    assert time_density(ModelParams.gaussian(), 0.0) == 1.0
    assert time_density(ModelParams.beta_model(0.0), 7.0) == pytest.approx(3 / (4 * math.pi))
    assert time_density(ModelParams.beta_prime(3.0), 1.0) == 0.0
    assert time_density(ModelParams.beta_model(2.0), -0.5) == 0.0


def test_total_mass_examples():
    m = ModelParams.beta_model(0.0)
    assert total_mass(m, 4 * math.pi / 3, TimeRange(0.0, 1.0)) == pytest.approx(1.0, rel=1e-12)
    assert total_mass(ModelParams.gaussian(), 1.0, TimeRange(-math.inf, 0.0)) == pytest.approx(1.0)
    mp = ModelParams.beta_prime(3.0)
    assert total_mass(mp, math.pi ** 2, TimeRange(-math.inf, -1.0)) == pytest.approx(2.0, rel=1e-12)


def test_divergent_mass_is_an_error():
    with pytest.raises(DivergentMassError):
        total_mass(ModelParams.beta_prime(3.0), 1.0, TimeRange(-1.0, 0.0))
    with pytest.raises(DivergentMassError):
        total_mass(ModelParams.gaussian(), 1.0, TimeRange(0.0, math.inf))


@pytest.mark.parametrize("m,lo,hi", [
    (ModelParams.beta_model(5.0), 0.0, 1.7),
    (ModelParams.beta_model(-0.5, gamma=2.0), 0.0, 3.0),
    (ModelParams.beta_prime(12.0), -3.0, -0.8),
    (ModelParams.beta_prime(2.5, gamma=0.5), -4.0, -0.2),
    (ModelParams.gaussian(), -6.0, 1.5),
    (ModelParams.gaussian(3), -2.0, 0.5),
])
def test_quadrature_matches_closed_form(m, lo, hi):
    quad, _ = integrate.quad(lambda h: time_density(m, h), lo, hi, epsabs=0, epsrel=1e-12, limit=200)
    assert total_mass(m, 1.0, TimeRange(lo, hi)) == pytest.approx(quad, rel=1e-8)


@pytest.mark.parametrize("m", [ModelParams.beta_model(5.0), ModelParams.beta_prime(12.0), ModelParams.gaussian()])
def test_inverse_cumulative_mass_round_trip(m):
    g = np.geomspace(1e-6, 1e3, 25)
    assert np.allclose(cumulative_mass(m, inverse_cumulative_mass(m, g)), g, rtol=1e-10)


def test_window_geometry():
    w = Window.of(3.0)
    assert w.volume == 36.0
    assert w.box(1.0).lo == (-4.0, -4.0)
    assert list(w.contains(np.array([[3.0, -3.0], [3.1, 0.0]]))) == [True, False]
    shifted = Window(1.0, (5.0, 5.0))
    assert shifted.contains(np.array([[5.5, 4.5]]))[0]


def test_model_round_trip():
    for m in (ModelParams.beta_model(5.0, 2.0), ModelParams.beta_prime(12.0), ModelParams.gaussian(3)):
        assert ModelParams.from_dict(m.to_dict()) == m
