"""Comparison metrics between the CDMA and NOMA equilibria."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from mfpc.channel import Population, empirical_mean_gain
from mfpc.game import Protocol, ProtocolParams, data_rate, utility
from mfpc.solver import EquilibriumResult, SolverConfig, solve


class Crossing(NamedTuple):
    """Sign change of a difference curve between users ``lo`` and ``hi``."""

    lo: int
    hi: int
    theta_lo: float
    theta_hi: float


@dataclass(frozen=True)
class WelfareReport:
    welfare_cdma: float
    welfare_noma: float
    jain_cdma: float
    jain_noma: float
    crossing_thetas: tuple
    rate_crossing_thetas: tuple
    max_gap_violation: float

    @property
    def welfare_gain(self) -> float:
        return self.welfare_noma - self.welfare_cdma


def equilibrium_rates(result: EquilibriumResult, pop: Population, params: ProtocolParams) -> np.ndarray:
    return data_rate(result.profile, pop.thetas, result.interference, params)


def social_welfare(result: EquilibriumResult, pop: Population, params: ProtocolParams) -> float:
    """Population-average utility at the result's profile and interference."""
    return float(np.mean(utility(result.profile, pop.thetas, result.interference, params)))


def jains_index(rates) -> float:
    """``(sum d)^2 / (N sum d^2)``: 1 when all equal, 1/N when one user has everything."""
    d = np.asarray(rates, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("no rates given")
    if np.any(d < 0):
        raise ValueError("rates must be non-negative")
    sq = np.sum(d**2)
    if sq == 0:
        raise ValueError("Jain's index is undefined when every rate is zero")
    return float(np.sum(d) ** 2 / (d.size * sq))


def sign_changes(diff, pop: Population) -> list[Crossing]:
    """Strict sign changes along the population, skipping exact zeros."""
    diff = np.asarray(diff, dtype=float).reshape(-1)
    if diff.size != pop.n:
        raise ValueError(f"difference has {diff.size} entries for {pop.n} users")
    nz = np.flatnonzero(diff != 0)
    s = np.sign(diff[nz])
    flips = np.flatnonzero(s[1:] != s[:-1])
    th = pop.thetas
    return [Crossing(int(nz[k]), int(nz[k + 1]), float(th[nz[k]]), float(th[nz[k + 1]])) for k in flips]


def crossing_detect(p_cdma, p_noma, pop: Population) -> list[Crossing]:
    """Where ``p_cdma - p_noma`` changes strict sign between neighbouring users.

    Indices are 0-based positions in the sorted population.  Users whose
    difference is exactly zero (e.g. both silent) are skipped, so a crossing
    may bracket a run of ties.
    """
    return sign_changes(np.asarray(p_cdma, dtype=float) - np.asarray(p_noma, dtype=float), pop)


def high_gain_gap_bound(pop: Population, params: ProtocolParams) -> np.ndarray:
    """``2 alpha E_max m / theta`` with ``m`` the sample mean gain."""
    return 2.0 * params.alpha * params.e_max * empirical_mean_gain(pop) / pop.thetas


def high_gain_gap_check(p_cdma, p_noma, pop: Population, params: ProtocolParams) -> float:
    """Largest excess of ``|p_cdma - p_noma|`` over the high-gain bound; <= 0 when it holds."""
    gap = np.abs(np.asarray(p_cdma, dtype=float) - np.asarray(p_noma, dtype=float))
    return float(np.max(gap - high_gain_gap_bound(pop, params)))


def solve_both(pop, params, cfg=None, **kw) -> tuple[EquilibriumResult, EquilibriumResult]:
    return solve(pop, params, Protocol.CDMA, cfg, **kw), solve(pop, params, Protocol.NOMA, cfg, **kw)


def welfare_dominance_check(pop: Population, params: ProtocolParams, cfg: SolverConfig | None = None) -> float:
    """Solve both equilibria and return ``welfare_noma - welfare_cdma``."""
    cdma, noma = solve_both(pop, params, cfg, raise_on_nonconvergence=True)
    return social_welfare(noma, pop, params) - social_welfare(cdma, pop, params)


def compare(cdma: EquilibriumResult, noma: EquilibriumResult, pop: Population,
            params: ProtocolParams) -> WelfareReport:
    rates_c = equilibrium_rates(cdma, pop, params)
    rates_n = equilibrium_rates(noma, pop, params)
    return WelfareReport(
        welfare_cdma=social_welfare(cdma, pop, params),
        welfare_noma=social_welfare(noma, pop, params),
        jain_cdma=jains_index(rates_c),
        jain_noma=jains_index(rates_n),
        crossing_thetas=tuple((c.theta_lo, c.theta_hi) for c in crossing_detect(cdma.profile, noma.profile, pop)),
        rate_crossing_thetas=tuple((c.theta_lo, c.theta_hi) for c in sign_changes(rates_c - rates_n, pop)),
        max_gap_violation=high_gain_gap_check(cdma.profile, noma.profile, pop, params),
    )
