import numpy as np
import pytest

from mfpc.channel import Population
from mfpc.game import Protocol, ProtocolParams, best_response, utility
from mfpc.oracle import (
    NoGridEquilibriumError,
    NonScalarBetaError,
    TruncationBindsError,
    brute_force_best_response,
    cdma_closed_form,
    grid_cell,
    search_with_grid_retry,
    tiny_equilibrium_search,
)
from mfpc.solver import SolverConfig, solve

from conftest import reference_params


class TestClosedForm:
    def test_worked_instance(self, two_users, params):
        p = cdma_closed_form(two_users, params)
        np.testing.assert_allclose(p, [5.3708, 12.6157], atol=5e-5)
        z = np.mean(p * two_users.thetas)
        # Quoted to four places as 342.2469; the exact value is 342.24681.
        assert z == pytest.approx(342.2469, abs=1.5e-4)

    def test_truncation_binds(self, two_users):
        with pytest.raises(TruncationBindsError):
            cdma_closed_form(two_users, reference_params(beta=50.0))

    def test_rayleigh_population_binds(self, rayleigh_pop, params):
        # Weak users sit at zero power under Rayleigh fading.
        with pytest.raises(TruncationBindsError):
            cdma_closed_form(rayleigh_pop, params)

    def test_refuses_per_user_beta(self, two_users):
        with pytest.raises(NonScalarBetaError):
            cdma_closed_form(two_users, ProtocolParams(alpha=0.25, n0=5, beta=[0.1, 0.2]))


class TestBruteForce:
    def test_matches_analytic(self, params):
        rng = np.random.default_rng(9)
        cell = grid_cell(params, 100_001)
        for theta, z in zip(rng.uniform(1, 80, 40), rng.uniform(0, 1000, 40)):
            assert abs(brute_force_best_response(theta, z, params, 100_001) - best_response(theta, z, params)) <= cell

    def test_expensive_power(self):
        assert brute_force_best_response(0.1, 10.0, reference_params(beta=50.0), 1001) == 0.0

    def test_two_point_grid(self, params):
        for theta, z in [(10.0, 0.0), (0.5, 100.0), (200.0, 5.0)]:
            got = brute_force_best_response(theta, z, params, 2)
            ends = [params.e_min, params.e_max]
            assert got == ends[int(np.argmax([utility(e, theta, z, params) for e in ends]))]

    def test_rejects_single_point(self, params):
        with pytest.raises(ValueError):
            brute_force_best_response(1.0, 1.0, params, 1)


class TestTinySearch:
    def test_single_user_cdma(self, params):
        pop = Population(np.array([10.0]))
        exact = 13.92695040888963 / 1.25
        assert exact == pytest.approx(11.14156, abs=1e-5)
        profile, points = search_with_grid_retry(pop, params, Protocol.CDMA, 200, attempts=1)
        assert abs(profile[0] - exact) <= grid_cell(params, points)

    def test_symmetric_pair(self, params):
        pop = Population(np.array([20.0, 20.0]))
        profile, _ = search_with_grid_retry(pop, params, Protocol.CDMA, 101)
        assert profile[0] == profile[1]

    @pytest.mark.parametrize("protocol", list(Protocol))
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_agrees_with_solver(self, params, protocol, n):
        pop = Population(np.linspace(15.0, 60.0, n))
        profile, points = search_with_grid_retry(pop, params, protocol, 61)
        res = solve(pop, params, protocol, SolverConfig(tol=1e-12))
        assert np.max(np.abs(profile - res.profile)) <= grid_cell(params, points)

    def test_limits(self, params):
        with pytest.raises(ValueError):
            tiny_equilibrium_search(Population(np.arange(1.0, 6.0)), params, Protocol.CDMA)
        with pytest.raises(ValueError):
            tiny_equilibrium_search(Population(np.array([1.0])), params, Protocol.CDMA, grid_points=500)

    def test_no_grid_equilibrium_reported(self, params):
        pop = Population(np.array([10.0]))
        misses = 0
        for points in range(5, 40):
            try:
                tiny_equilibrium_search(pop, params, Protocol.CDMA, points)
            except NoGridEquilibriumError:
                misses += 1
        assert misses < 35
