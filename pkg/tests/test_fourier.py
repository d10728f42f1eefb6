import math

import numpy as np
import pytest

from latticewalk.env import EnvironmentSpec, OrientationField
from latticewalk.error import BudgetExceededError, QuadratureError
from latticewalk.fourier import (
    CharFnParams,
    QuenchedLaw,
    alpha,
    chi,
    exact_distribution,
    exact_return_prob,
    interval_hit_from_distribution,
    interval_hit_prob,
    monte_carlo_return_prob,
    quenched_cf,
    quenched_interval_prob,
    quenched_return_prob,
    r,
)


def random_laws(count, max_total, seed=0):
    rng = np.random.default_rng(seed)
    laws = []
    while len(laws) < count:
        n_plus, n_minus = rng.integers(0, max_total + 1, size=2)
        if 0 < n_plus + n_minus <= max_total:
            laws.append(QuenchedLaw.from_signed(n_plus, n_minus))
    return laws


class TestCharacteristicFunction(object):

    def test_values(self):
        assert chi(0.0) == pytest.approx(1.0)
        assert r(math.pi) == pytest.approx(0.5)
        assert alpha(0.0) == pytest.approx(0.0)

    def test_polar_form(self):
        theta = np.linspace(-math.pi, math.pi, 101)
        np.testing.assert_allclose(r(theta) * np.exp(1j * alpha(theta)), chi(theta))

    def test_modulus_shape(self):
        theta = np.linspace(0.01, math.pi, 200)
        assert np.all(r(theta) < 1.0)
        np.testing.assert_allclose(r(-theta), r(theta))
        assert np.all(np.diff(r(theta)) < 0)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            CharFnParams(0.0)

    def test_product(self):
        theta = np.linspace(-3.0, 3.0, 31)
        law = QuenchedLaw([(1, 2), (-1, 1), (1, 1)])
        expected = chi(theta) ** 3 * chi(-theta)
        np.testing.assert_allclose(quenched_cf(theta, law), expected)
        assert np.all(np.abs(quenched_cf(theta, law)) <= r(theta) ** 4 + 1e-15)
        np.testing.assert_allclose(quenched_cf(theta, QuenchedLaw()), 1.0)


class TestQuenchedLaw(object):

    def test_totals(self):
        law = QuenchedLaw([(1, 3), (-1, 2), (1, 0)])
        assert law.signed_weights() == (3, 2)
        assert law.total == 5
        assert law.extended(-1, 4).n_minus == 6

    def test_from_occupation(self):
        field = OrientationField(EnvironmentSpec.alternating())
        law = QuenchedLaw.from_occupation({0: 3, 1: 2, -1: 1, 2: 1}, field)
        assert (law.n_plus, law.n_minus) == (4, 3)

    @pytest.mark.parametrize("pair", [(0, 1), (1, -1)])
    def test_invalid(self, pair):
        with pytest.raises(ValueError):
            QuenchedLaw([pair])


class TestReturnProbability(object):

    @pytest.mark.parametrize("pairs, expected", [
        ([(1, 0)], 1.0),
        ([(1, 1)], 2.0 / 3.0),
        ([(1, 1), (-1, 1)], 0.5),
        ([(1, 2)], 4.0 / 9.0),
    ])
    def test_known_values(self, pairs, expected):
        law = QuenchedLaw(pairs)
        assert exact_return_prob(law) == pytest.approx(expected, abs=1e-12)
        assert quenched_return_prob(law) == pytest.approx(expected, abs=1e-9)

    def test_oracles_agree(self):
        for law in random_laws(20, 12):
            assert abs(quenched_return_prob(law) - exact_return_prob(law)) < 1e-8

    def test_node_doubling_is_stable(self):
        law = QuenchedLaw.from_signed(40, 25)
        coarse = quenched_return_prob(law)
        fine = quenched_return_prob(law, min_nodes=4096)
        assert abs(coarse - fine) < 1e-10

    def test_does_not_converge(self):
        with pytest.raises(QuadratureError):
            quenched_return_prob(QuenchedLaw.from_signed(10 ** 6, 0), max_nodes=512)

    def test_distribution_sums_to_one(self):
        offset, pmf = exact_distribution(QuenchedLaw.from_signed(5, 4))
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert offset < 0

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            exact_distribution(QuenchedLaw.from_signed(50, 0), budget=100)

    def test_monte_carlo(self):
        rng = np.random.default_rng(1)
        for law in random_laws(5, 60, seed=2):
            estimate, se = monte_carlo_return_prob(law, 10 ** 5, rng)
            assert abs(estimate - quenched_return_prob(law)) < 4 * se + 1e-12


class TestIntervalProbability(object):

    def test_zero_position(self):
        assert quenched_interval_prob(QuenchedLaw(), 1) == pytest.approx(1.0)
        assert interval_hit_prob(QuenchedLaw(), -1) == pytest.approx(1.0)

    def test_unit_position_against_orientation(self):
        assert interval_hit_from_distribution(1, np.array([1.0]), -1) == pytest.approx(1.0 / 3.0)
        assert interval_hit_from_distribution(1, np.array([1.0]), 1) == 0.0

    def test_dominates_return(self):
        for law in random_laws(10, 12, seed=3):
            for eps0 in (-1, 1):
                assert interval_hit_prob(law, eps0) >= exact_return_prob(law) - 1e-12

    def test_oracles_agree(self):
        for law in random_laws(10, 12, seed=4):
            for eps0 in (-1, 1):
                assert abs(quenched_interval_prob(law, eps0)
                           - interval_hit_prob(law, eps0)) < 1e-8

    def test_invalid_orientation(self):
        with pytest.raises(ValueError):
            quenched_interval_prob(QuenchedLaw(), 0)
