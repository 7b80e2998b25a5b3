import numpy as np
import pytest

from mfpc.channel import BoundedUniform, Population, sample_population
from mfpc.game import Protocol, ProtocolParams
from mfpc.oracle import cdma_closed_form
from mfpc.solver import (
    EquilibriumResult,
    InvalidAlphaError,
    NonConvergenceError,
    Norm,
    SolverConfig,
    residual_norm,
    resolve_norm,
    solve,
    verify_fixed_point,
)

from conftest import BETAS, reference_params, reference_population


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(tol=0)
        with pytest.raises(ValueError):
            SolverConfig(max_iter=0)
        with pytest.raises(ValueError):
            SolverConfig(initial="random")
        assert SolverConfig(norm="sup").norm is Norm.SUP


class TestResidualNorm:
    def test_zero(self, two_users):
        for norm in (Norm.WEIGHTED_L1, Norm.SUP):
            assert residual_norm(np.zeros(2), two_users, norm) == 0.0

    def test_example(self):
        pop = Population(np.array([1.0, 3.0]))
        assert residual_norm([1.0, 1.0], pop, Norm.WEIGHTED_L1) == 2.0
        assert residual_norm([1.0, -1.0], pop, Norm.SUP) == 1.0

    def test_auto_resolution(self, two_users):
        assert resolve_norm(Norm.AUTO, Protocol.CDMA) is Norm.WEIGHTED_L1
        assert resolve_norm(Norm.AUTO, Protocol.NOMA) is Norm.SUP
        with pytest.raises(ValueError):
            residual_norm([0.0, 0.0], two_users, Norm.AUTO)


class TestSolve:
    def test_worked_instance(self, two_users, params):
        res = solve(two_users, params, Protocol.CDMA)
        assert res.converged
        np.testing.assert_allclose(res.profile, [5.370780163555855, 12.615716359822878], atol=1e-8)
        np.testing.assert_allclose(res.interference, 342.2468098133512, atol=1e-6)

    def test_matches_closed_form(self, uniform_pop, params):
        res = solve(uniform_pop, params, Protocol.CDMA)
        np.testing.assert_allclose(res.profile, cdma_closed_form(uniform_pop, params), atol=1e-8, rtol=0)

    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_loose_tolerance(self, rayleigh_pop, params, protocol):
        res = solve(rayleigh_pop, params, protocol, SolverConfig(tol=10.0, initial=75.0))
        assert res.converged
        assert res.iterations <= 5

    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_contraction_ratio(self, rayleigh_pop, params, protocol):
        res = solve(rayleigh_pop, params, protocol)
        assert res.converged
        r = res.residuals
        eps = 100 * np.finfo(float).eps
        for k in range(1, r.size - 1):
            if r[k] > eps:
                assert r[k + 1] <= params.alpha * r[k] + 1e-9

    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_residual_bookkeeping(self, rayleigh_pop, params, protocol):
        res = solve(rayleigh_pop, params, protocol)
        assert res.residuals[-1] <= 1e-10
        assert np.all(res.residuals[:-1] > 0)
        assert res.iterations == res.residuals.size
        assert np.all((res.profile >= 0) & (res.profile <= 150))

    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_initialisation_independence(self, rayleigh_pop, params, protocol):
        tol = 1e-10
        lo = solve(rayleigh_pop, params, protocol, SolverConfig(tol=tol, initial=params.e_min))
        hi = solve(rayleigh_pop, params, protocol, SolverConfig(tol=tol, initial=params.e_max))
        norm = resolve_norm(Norm.AUTO, protocol)
        assert residual_norm(lo.profile - hi.profile, rayleigh_pop, norm) <= 2 * tol / (1 - params.alpha)

    @pytest.mark.parametrize("beta", BETAS)
    def test_cdma_monotone(self, rayleigh_pop, beta):
        res = solve(rayleigh_pop, reference_params(beta), Protocol.CDMA)
        assert np.all(np.diff(res.profile) >= 0)

    def test_noma_fixed_point(self, rayleigh_pop, params):
        res = solve(rayleigh_pop, params, Protocol.NOMA)
        assert verify_fixed_point(res, rayleigh_pop, params) <= 1e-9
        assert np.all(np.diff(res.interference) >= 0)

    def test_alpha_guard(self, two_users):
        p = ProtocolParams(alpha=1.0, n0=5, beta=0.1)
        with pytest.raises(InvalidAlphaError):
            solve(two_users, p, Protocol.CDMA)
        res = solve(two_users, p, Protocol.CDMA, SolverConfig(max_iter=50), allow_alpha_ge_one=True)
        assert res.iterations <= 50

    def test_nonconvergence(self, rayleigh_pop, params):
        cfg = SolverConfig(tol=1e-14, max_iter=2)
        res = solve(rayleigh_pop, params, Protocol.CDMA, cfg)
        assert not res.converged and res.iterations == 2
        with pytest.raises(NonConvergenceError) as info:
            solve(rayleigh_pop, params, Protocol.CDMA, cfg, raise_on_nonconvergence=True)
        assert info.value.result.iterations == 2

    def test_per_user_beta(self, two_users):
        p = ProtocolParams(alpha=0.25, n0=5, beta=[0.1, 0.1])
        a = solve(two_users, p, Protocol.NOMA).profile
        b = solve(two_users, p.replace(beta=0.1), Protocol.NOMA).profile
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_explicit_initial_profile(self, two_users, params):
        res = solve(two_users, params, Protocol.NOMA, SolverConfig(initial=np.array([0.0, 150.0])))
        assert res.converged
        with pytest.raises(ValueError):
            solve(two_users, params, Protocol.NOMA, SolverConfig(initial=np.array([0.0, 151.0])))


class TestVerifyFixedPoint:
    def test_closed_form_is_fixed_point(self, uniform_pop, params):
        res = EquilibriumResult.from_profile(cdma_closed_form(uniform_pop, params), uniform_pop, Protocol.CDMA)
        assert verify_fixed_point(res, uniform_pop, params) <= 1e-10

    def test_non_equilibrium(self, uniform_pop):
        p = reference_params(beta=5.0)
        res = EquilibriumResult.from_profile(np.full(uniform_pop.n, 150.0), uniform_pop, Protocol.CDMA)
        assert verify_fixed_point(res, uniform_pop, p) > 100

    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_converged_output(self, params, protocol):
        pop = reference_population(4)
        res = solve(pop, params, protocol)
        assert verify_fixed_point(res, pop, params) <= 1e-9
