"""Monte-Carlo decoding at the receiver.

The equilibrium analysis assumes SIC cancels every earlier user perfectly.
This module drops that assumption and replays the decoder: users are
attempted in descending order of realized gain, a signal decodes when its
instantaneous capacity exceeds its target rate, and the cross-correlation
model ``alpha/N`` sets the residual interference.

Two SIC variants are modelled.  ``strict`` stops at the first failure and
drops every remaining user.  ``improved`` keeps going and leaves each failed
signal in the interference seen by later users.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from mfpc import rng as _rng
from mfpc.channel import ChannelDistribution, Population, RayleighSquared
from mfpc.game import ProtocolParams


class SicVariant(str, enum.Enum):
    STRICT = "strict"
    IMPROVED = "improved"


class PowerRule(str, enum.Enum):
    FIXED = "fixed"  # user i keeps its equilibrium power whatever its new gain
    STRATEGY = "strategy"  # power re-read from the equilibrium strategy at the new gain


def capacity(a, theta, interference_sum, params: ProtocolParams):
    """``log2(1 + theta a / (alpha * interference_sum + n0))``; ``interference_sum`` is already divided by N."""
    return np.log2(1.0 + np.asarray(theta) * np.asarray(a) / (params.alpha * np.asarray(interference_sum) + params.n0))


def decode_indicator(a, theta, z, params: ProtocolParams, rate):
    """1 when the instantaneous capacity strictly exceeds ``rate``, else 0."""
    if np.any(np.asarray(rate) <= 0):
        raise ValueError("target rate must be positive")
    out = (capacity(a, theta, z, params) > np.asarray(rate)).astype(int)
    return int(out) if np.ndim(out) == 0 else out


def outage_probability_rayleigh(dist: RayleighSquared, a: float, z: float, params: ProtocolParams,
                                rate: float) -> float:
    """Closed-form outage ``1 - exp(-(2^R - 1)(alpha z + n0)/(a sigma^2))``."""
    if a <= 0:
        return 1.0
    threshold = (2.0**rate - 1.0) * (params.alpha * z + params.n0) / a
    return float(-math.expm1(-threshold / dist.scale))


def outage_probability_mc(dist: ChannelDistribution, a: float, z: float, params: ProtocolParams,
                          rate: float, trials: int, seed: int) -> float:
    """Fraction of gain draws for which decoding fails."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if rate <= 0:
        raise ValueError("target rate must be positive")
    if a == 0:
        return 1.0
    thetas = dist._draw(_rng.stream(seed, "outage"), int(trials))
    return float(1.0 - np.mean(decode_indicator(a, thetas, z, params, rate)))


@dataclass(frozen=True, eq=False)
class DecodingScenario:
    """One decoding experiment.

    ``dist`` supplies fresh gains for every trial; with ``dist=None`` the
    population's own gains are replayed each trial.
    """

    rates: float | np.ndarray
    profile: np.ndarray
    pop: Population
    params: ProtocolParams
    sic_variant: SicVariant = SicVariant.IMPROVED
    trials: int = 1000
    seed: int = 0
    dist: ChannelDistribution | None = None
    power_rule: PowerRule = PowerRule.FIXED

    def __post_init__(self):
        rates = np.broadcast_to(np.asarray(self.rates, dtype=float), (self.pop.n,)).copy()
        if np.any(rates <= 0):
            raise ValueError("target rates must be positive")
        profile = np.asarray(self.profile, dtype=float).reshape(-1)
        if profile.size != self.pop.n:
            raise ValueError(f"profile has {profile.size} entries for {self.pop.n} users")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "profile", profile)
        object.__setattr__(self, "sic_variant", SicVariant(self.sic_variant))
        object.__setattr__(self, "power_rule", PowerRule(self.power_rule))

    def powers_for(self, thetas: np.ndarray) -> np.ndarray:
        if self.power_rule is PowerRule.FIXED:
            return np.broadcast_to(self.profile, thetas.shape)
        return np.interp(thetas, self.pop.thetas, self.profile)


def _sic_batch(thetas: np.ndarray, powers: np.ndarray, rates: np.ndarray, params: ProtocolParams,
               variant: SicVariant) -> np.ndarray:
    """Decode each row of ``thetas`` (trials x users); returns success flags."""
    n_trials, n = thetas.shape
    order = np.argsort(-thetas, axis=1, kind="stable")
    th = np.take_along_axis(thetas, order, axis=1)
    a = np.take_along_axis(np.asarray(powers, dtype=float), order, axis=1)
    r = np.asarray(rates)[order]
    received = a * th
    pending = received.sum(axis=1)
    failed = np.zeros(n_trials)
    alive = np.ones(n_trials, dtype=bool)
    ok_sorted = np.zeros((n_trials, n), dtype=bool)
    for k in range(n):
        pending = pending - received[:, k]
        # Guard against round-off driving the remaining sum below zero.
        pending = np.maximum(pending, 0.0)
        ok = capacity(a[:, k], th[:, k], (pending + failed) / n, params) > r[:, k]
        if variant is SicVariant.STRICT:
            ok &= alive
            alive &= ok
        else:
            failed = failed + np.where(ok, 0.0, received[:, k])
        ok_sorted[:, k] = ok
    out = np.zeros_like(ok_sorted)
    np.put_along_axis(out, order, ok_sorted, axis=1)
    return out


def sic_round(scenario: DecodingScenario, realized_thetas) -> np.ndarray:
    """Decode one realization; returns the 0/1 outcome per user (population order)."""
    th = np.asarray(realized_thetas, dtype=float).reshape(-1)
    if th.size != scenario.pop.n:
        raise ValueError(f"{th.size} realized gains for {scenario.pop.n} users")
    out = _sic_batch(th[None, :], scenario.powers_for(th)[None, :],
                     scenario.rates, scenario.params, scenario.sic_variant)
    return out[0].astype(int)


def realize_gains(scenario: DecodingScenario, trial: int) -> np.ndarray:
    """Gains for one trial, drawn from that trial's own stream."""
    if scenario.dist is None:
        return np.array(scenario.pop.thetas)
    return scenario.dist._draw(_rng.stream(scenario.seed, "decode", trial), scenario.pop.n)


def mpr_success_rates(scenario: DecodingScenario, batch: int = 4096) -> np.ndarray:
    """Per-user empirical probability of successful decoding over all trials."""
    n = scenario.pop.n
    wins = np.zeros(n)
    for start in range(0, scenario.trials, batch):
        stop = min(start + batch, scenario.trials)
        thetas = np.stack([realize_gains(scenario, t) for t in range(start, stop)])
        powers = scenario.powers_for(thetas)
        wins += _sic_batch(thetas, powers, scenario.rates, scenario.params, scenario.sic_variant).sum(axis=0)
    return wins / scenario.trials
