"""Utility, interference maps and best responses of the uplink power game.

All functions are vectorised over numpy arrays.  A user with identifier
``theta`` transmitting at power ``a`` against mean-field interference ``z``
earns

    log2(1 + theta * a / (alpha * z + n0)) - beta * a

CDMA users all see the same interference (the population mean of received
power); under NOMA with descending-gain SIC a user only sees users with a
strictly smaller gain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from mfpc.channel import Population

LN2 = math.log(2.0)


class Protocol(str, enum.Enum):
    CDMA = "cdma"
    NOMA = "noma"


@dataclass(frozen=True, eq=False)
class ProtocolParams:
    """Physical and economic constants shared by both protocols.

    ``beta`` is a scalar power price, or one price per user (index-aligned
    to the population).
    """

    alpha: float
    n0: float
    beta: float | np.ndarray
    e_min: float = 0.0
    e_max: float = 150.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (math.isfinite(self.n0) and self.n0 > 0):
            raise ValueError(f"n0 must be positive, got {self.n0}")
        if not (0 <= self.e_min < self.e_max < math.inf):
            raise ValueError(f"need 0 <= e_min < e_max < inf, got [{self.e_min}, {self.e_max}]")
        if np.ndim(self.beta) == 0:
            beta = float(self.beta)
            if not (math.isfinite(beta) and beta > 0):
                raise ValueError(f"beta must be positive, got {self.beta}")
        else:
            beta = np.array(self.beta, dtype=float).reshape(-1)
            if beta.size == 0 or not np.all(np.isfinite(beta)) or np.any(beta <= 0):
                raise ValueError("every per-user beta must be positive and finite")
            beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    @property
    def scalar_beta(self) -> bool:
        return np.ndim(self.beta) == 0

    def beta_at(self, user_index=None):
        """Price for ``user_index`` (all users when ``None``)."""
        if self.scalar_beta or user_index is None:
            return self.beta
        return self.beta[user_index]

    def replace(self, **changes) -> "ProtocolParams":
        fields = dict(alpha=self.alpha, n0=self.n0, beta=self.beta, e_min=self.e_min, e_max=self.e_max)
        fields.update(changes)
        return ProtocolParams(**fields)

    def check_population(self, pop: Population) -> None:
        if not self.scalar_beta and self.beta.size != pop.n:
            raise ValueError(f"per-user beta has {self.beta.size} entries for {pop.n} users")


def project_power(x, params: ProtocolParams):
    """Clamp ``x`` onto ``[e_min, e_max]``."""
    out = np.clip(x, params.e_min, params.e_max)
    return float(out) if np.ndim(out) == 0 else out


def _aligned(profile, pop: Population) -> np.ndarray:
    a = np.asarray(profile, dtype=float).reshape(-1)
    if a.size != pop.n:
        raise ValueError(f"profile has {a.size} entries for {pop.n} users")
    return a


def interference_cdma(profile, pop: Population) -> float:
    """Mean received power ``(1/N) sum_j a_j theta_j`` (own signal included)."""
    a = _aligned(profile, pop)
    return float(np.mean(a * pop.thetas))


def interference_noma(profile, pop: Population) -> np.ndarray:
    """Per-user ``(1/N) sum_{theta_j < theta_i} a_j theta_j``.

    Users with equal gains do not interfere with each other.
    """
    a = _aligned(profile, pop)
    th = pop.thetas
    if np.any(np.diff(th) < 0):
        raise ValueError("population must be sorted ascending")
    prefix = np.concatenate([[0.0], np.cumsum(a * th)])
    n_below = np.searchsorted(th, th, side="left")
    return prefix[n_below] / pop.n


def interference(profile, pop: Population, protocol: Protocol) -> np.ndarray:
    """Interference seen by every user, as a full-length array."""
    protocol = Protocol(protocol)
    if protocol is Protocol.CDMA:
        return np.full(pop.n, interference_cdma(profile, pop))
    return interference_noma(profile, pop)


def _sinr_term(a, theta, z, params):
    return np.asarray(theta) * np.asarray(a) / (params.alpha * np.asarray(z) + params.n0)


def data_rate(a, theta, z, params: ProtocolParams):
    """Achieved rate ``log2(1 + theta a / (alpha z + n0))`` in bits/s/Hz."""
    out = np.log2(1.0 + _sinr_term(a, theta, z, params))
    return float(out) if np.ndim(out) == 0 else out


def utility(a, theta, z, params: ProtocolParams, user_index=None):
    out = np.log2(1.0 + _sinr_term(a, theta, z, params)) - params.beta_at(user_index) * np.asarray(a)
    return float(out) if np.ndim(out) == 0 else out


def best_response(theta, z, params: ProtocolParams, user_index=None):
    """Unique maximiser of :func:`utility` over ``[e_min, e_max]``.

    Stationary point ``1/(beta ln 2) - (alpha z + n0)/theta``, projected
    onto the power interval (the utility is strictly concave in ``a``).
    """
    beta = params.beta_at(user_index)
    raw = 1.0 / (beta * LN2) - (params.alpha * np.asarray(z) + params.n0) / np.asarray(theta)
    return project_power(raw, params)
