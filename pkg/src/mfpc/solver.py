"""Synchronous best-response iteration for the mean-field equilibrium.

Every user responds to the same snapshot of the previous profile, then the
interference is recomputed.  For ``alpha < 1`` this map contracts with
constant ``alpha``: in the gain-weighted L1 norm under CDMA and in the sup
norm under NOMA, so the iteration converges from any starting profile to
the unique equilibrium.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from mfpc.channel import Population
from mfpc.game import Protocol, ProtocolParams, best_response, interference

log = logging.getLogger(__name__)


class Norm(str, enum.Enum):
    WEIGHTED_L1 = "weighted_l1"
    SUP = "sup"
    AUTO = "auto"


class InvalidAlphaError(ValueError):
    """alpha >= 1: the contraction guarantee no longer holds."""


class NonConvergenceError(RuntimeError):
    """Iteration cap reached before the residual fell below tolerance."""

    def __init__(self, result: "EquilibriumResult"):
        self.result = result
        last = result.residuals[-1] if result.residuals.size else float("nan")
        super().__init__(f"{result.protocol.value}: no convergence after {result.iterations} iterations "
                         f"(last residual {last:.3e})")


MIDPOINT = "midpoint"

Initial = Union[str, float, np.ndarray]


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and starting point.

    ``initial`` is ``"midpoint"`` (centre of the power interval), a constant
    power, or an explicit per-user profile.
    """

    tol: float = 1e-10
    max_iter: int = 10_000
    initial: Initial = MIDPOINT
    norm: Norm = Norm.AUTO

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        object.__setattr__(self, "norm", Norm(self.norm))
        if isinstance(self.initial, str) and self.initial != MIDPOINT:
            raise ValueError(f"unknown initial strategy {self.initial!r}")


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    profile: np.ndarray
    interference: np.ndarray
    residuals: np.ndarray
    iterations: int
    protocol: Protocol
    converged: bool
    norm: Norm = field(default=Norm.AUTO)

    @classmethod
    def from_profile(cls, profile, pop: Population, protocol: Protocol | str) -> "EquilibriumResult":
        """Wrap an externally computed profile (no iteration history)."""
        protocol = Protocol(protocol)
        p = np.array(profile, dtype=float).reshape(-1)
        return cls(p, interference(p, pop, protocol), np.zeros(0), 0, protocol, True,
                   resolve_norm(Norm.AUTO, protocol))


def resolve_norm(norm: Norm, protocol: Protocol) -> Norm:
    norm = Norm(norm)
    if norm is not Norm.AUTO:
        return norm
    return Norm.WEIGHTED_L1 if Protocol(protocol) is Protocol.CDMA else Norm.SUP


def residual_norm(delta, pop: Population, norm: Norm) -> float:
    """Size of a profile difference.

    ``weighted_l1`` is ``(1/N) sum |delta_i| theta_i``, the sample version of
    the gain-weighted L1 norm; ``sup`` is ``max |delta_i|``.  ``auto`` must be
    resolved against a protocol first (see :func:`resolve_norm`).
    """
    d = np.asarray(delta, dtype=float).reshape(-1)
    if d.size != pop.n:
        raise ValueError(f"difference has {d.size} entries for {pop.n} users")
    norm = Norm(norm)
    if norm is Norm.WEIGHTED_L1:
        return float(np.mean(np.abs(d) * pop.thetas))
    if norm is Norm.SUP:
        return float(np.max(np.abs(d)))
    raise ValueError("resolve the 'auto' norm against a protocol before evaluating it")


def initial_profile(initial: Initial, pop: Population, params: ProtocolParams) -> np.ndarray:
    if isinstance(initial, str):
        return np.full(pop.n, 0.5 * (params.e_min + params.e_max))
    if np.ndim(initial) == 0:
        value = float(initial)
        if not params.e_min <= value <= params.e_max:
            raise ValueError(f"initial power {value} outside [{params.e_min}, {params.e_max}]")
        return np.full(pop.n, value)
    p0 = np.array(initial, dtype=float).reshape(-1)
    if p0.size != pop.n:
        raise ValueError(f"initial profile has {p0.size} entries for {pop.n} users")
    if np.any(p0 < params.e_min) or np.any(p0 > params.e_max):
        raise ValueError("initial profile leaves the power interval")
    return p0


def solve(
    pop: Population,
    params: ProtocolParams,
    protocol: Protocol | str,
    cfg: SolverConfig | None = None,
    *,
    allow_alpha_ge_one: bool = False,
    raise_on_nonconvergence: bool = False,
    response: Callable = best_response,
) -> EquilibriumResult:
    """Run the parallel best-response iteration until the step is below ``cfg.tol``.

    Returns a result with ``converged=False`` when ``max_iter`` is exhausted,
    or raises :class:`NonConvergenceError` if ``raise_on_nonconvergence``.
    ``response`` replaces the best-response map (used to inject faults).
    """
    cfg = cfg or SolverConfig()
    protocol = Protocol(protocol)
    if params.alpha >= 1 and not allow_alpha_ge_one:
        raise InvalidAlphaError(f"alpha={params.alpha} >= 1; pass allow_alpha_ge_one=True to iterate anyway")
    params.check_population(pop)
    norm = resolve_norm(cfg.norm, protocol)

    p = initial_profile(cfg.initial, pop, params)
    residuals = []
    converged = False
    for _ in range(int(cfg.max_iter)):
        z = interference(p, pop, protocol)
        p_next = np.asarray(response(pop.thetas, z, params, None), dtype=float)
        r = residual_norm(p_next - p, pop, norm)
        residuals.append(r)
        p = p_next
        if r <= cfg.tol:
            converged = True
            break

    result = EquilibriumResult(
        profile=p,
        interference=interference(p, pop, protocol),
        residuals=np.array(residuals),
        iterations=len(residuals),
        protocol=protocol,
        converged=converged,
        norm=norm,
    )
    if not converged:
        if raise_on_nonconvergence:
            raise NonConvergenceError(result)
        log.warning("%s iteration stopped at max_iter=%d, residual %.3e", protocol.value, cfg.max_iter, residuals[-1])
    return result


def verify_fixed_point(result: EquilibriumResult, pop: Population, params: ProtocolParams) -> float:
    """Largest gap between a profile and the best response to its own interference."""
    z = interference(result.profile, pop, result.protocol)
    return float(np.max(np.abs(result.profile - best_response(pop.thetas, z, params, None))))
