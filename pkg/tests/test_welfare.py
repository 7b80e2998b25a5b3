import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfpc.channel import Population
from mfpc.game import LN2, Protocol, best_response, data_rate, utility
from mfpc.solver import EquilibriumResult, solve
from mfpc.welfare import (
    compare,
    crossing_detect,
    equilibrium_rates,
    high_gain_gap_bound,
    high_gain_gap_check,
    jains_index,
    sign_changes,
    social_welfare,
    welfare_dominance_check,
)

from conftest import BETAS, reference_params, reference_population


class TestSocialWelfare:
    def test_two_user_closed_form(self, two_users, params):
        res = solve(two_users, params, Protocol.CDMA)
        # Hand evaluation at p* = (5.37078, 12.61572), alpha z* + n0 = 90.56170.
        assert social_welfare(res, two_users, params) == pytest.approx(0.933433, abs=1e-6)

    def test_zero_profile(self, two_users, params):
        res = EquilibriumResult.from_profile(np.zeros(2), two_users, Protocol.NOMA)
        assert social_welfare(res, two_users, params) == 0.0

    def test_single_user_best_response(self, params):
        pop = Population(np.array([30.0]))
        res = solve(pop, params, Protocol.NOMA)
        grid = np.linspace(0, 150, 100_001)
        assert social_welfare(res, pop, params) == pytest.approx(np.max(utility(grid, 30.0, 0.0, params)), abs=1e-8)


class TestJain:
    def test_equal(self):
        assert jains_index(np.full(7, 2.5)) == pytest.approx(1.0)

    def test_single_nonzero(self):
        assert jains_index([0, 0, 3.0, 0]) == pytest.approx(0.25)

    def test_errors(self):
        for bad in ([], [0.0, 0.0], [1.0, -1.0]):
            with pytest.raises(ValueError):
                jains_index(bad)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=50).filter(lambda d: sum(d) > 1e-6),
           st.floats(1e-3, 1e3))
    def test_scale_invariant_and_bounded(self, d, c):
        d = np.array(d)
        j = jains_index(d)
        assert 1.0 / d.size - 1e-12 <= j <= 1.0 + 1e-12
        assert jains_index(c * d) == pytest.approx(j, rel=1e-9)


class TestCrossing:
    def test_identical(self, two_users):
        assert crossing_detect([1.0, 2.0], [1.0, 2.0], two_users) == []

    def test_single_sign_change(self):
        pop = Population(np.array([1.0, 2.0, 3.0, 4.0]))
        diff = np.array([-1.0, -0.5, 0.2, 0.4])
        out = crossing_detect(diff, np.zeros(4), pop)
        assert len(out) == 1
        assert (out[0].lo, out[0].hi) == (1, 2)
        assert (out[0].theta_lo, out[0].theta_hi) == (2.0, 3.0)

    def test_zeros_skipped(self):
        pop = Population(np.arange(1.0, 6.0))
        out = sign_changes([0.0, -1.0, 0.0, 0.0, 2.0], pop)
        assert [(c.lo, c.hi) for c in out] == [(1, 4)]
        assert sign_changes(np.zeros(5), pop) == []

    @pytest.mark.parametrize("beta", BETAS)
    def test_reference_configuration(self, rayleigh_pop, beta):
        params = reference_params(beta)
        cdma, noma = (solve(rayleigh_pop, params, p) for p in Protocol)
        assert crossing_detect(cdma.profile, noma.profile, rayleigh_pop)


class TestGapBound:
    def test_identical_profiles(self, two_users, params):
        expected = -np.min(2 * params.alpha * params.e_max * 30.0 / two_users.thetas)
        assert high_gain_gap_check([1.0, 1.0], [1.0, 1.0], two_users, params) == pytest.approx(expected)

    def test_boundary_case(self, rayleigh_pop, params):
        bound = high_gain_gap_bound(rayleigh_pop, params)
        p = np.full(rayleigh_pop.n, 3.0)
        assert abs(high_gain_gap_check(p + bound, p, rayleigh_pop, params)) <= 1e-12

    @pytest.mark.parametrize("beta", BETAS)
    def test_reference_configuration(self, rayleigh_pop, beta):
        params = reference_params(beta)
        cdma, noma = (solve(rayleigh_pop, params, p) for p in Protocol)
        assert high_gain_gap_check(cdma.profile, noma.profile, rayleigh_pop, params) <= 0


class TestDominance:
    @pytest.mark.parametrize("beta", BETAS)
    def test_reference_configuration(self, rayleigh_pop, beta):
        assert welfare_dominance_check(rayleigh_pop, reference_params(beta)) > 0

    def test_single_user(self, params):
        assert welfare_dominance_check(Population(np.array([12.0])), params) >= 0

    def test_vanishing_cross_correlation(self):
        pop = reference_population(2)
        assert abs(welfare_dominance_check(pop, reference_params().replace(alpha=1e-6))) < 1e-4


class TestRates:
    def test_interior_rate_identity(self, rayleigh_pop, params):
        for protocol in Protocol:
            res = solve(rayleigh_pop, params, protocol)
            rates = equilibrium_rates(res, rayleigh_pop, params)
            inside = (res.profile > params.e_min) & (res.profile < params.e_max)
            ident = np.log2(1.0 / (1.0 - params.beta * LN2 * res.profile[inside]))
            np.testing.assert_allclose(rates[inside], ident, atol=1e-10)

    def test_compare_report(self, rayleigh_pop, params):
        cdma, noma = (solve(rayleigh_pop, params, p) for p in Protocol)
        rep = compare(cdma, noma, rayleigh_pop, params)
        assert 0 < rep.jain_cdma <= 1 and 0 < rep.jain_noma <= 1
        assert math.isfinite(rep.welfare_cdma) and rep.welfare_gain > 0
        assert rep.crossing_thetas and rep.rate_crossing_thetas
        assert rep.max_gap_violation <= 0
