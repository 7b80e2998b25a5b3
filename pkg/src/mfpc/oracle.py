"""Independent ground truth for checking the solver.

None of these routines calls the iterative solver or the analytic best
response; they are meant for tests and the ``oracle-check`` command.
"""

from __future__ import annotations

import numpy as np

from mfpc.channel import Population, empirical_mean_gain
from mfpc.game import LN2, Protocol, ProtocolParams, utility


class TruncationBindsError(ValueError):
    """The closed form would put some user outside the open power interval."""


class NonScalarBetaError(ValueError):
    pass


class NoGridEquilibriumError(RuntimeError):
    pass


def cdma_closed_form(pop: Population, params: ProtocolParams) -> np.ndarray:
    """Finite-population CDMA equilibrium when no power constraint binds.

    With ``m`` the sample mean gain, the common interference solves
    ``z = m/(beta ln 2) - (alpha z + n0)``, giving
    ``z* = (m/(beta ln 2) - n0)/(1 + alpha)`` and
    ``p*(theta) = 1/(beta ln 2) - (alpha z* + n0)/theta``.

    Raises :class:`TruncationBindsError` when any ``p*(theta_i)`` falls
    outside ``(e_min, e_max)``; the iterative solver must be used then.
    """
    if not params.scalar_beta:
        raise NonScalarBetaError("the closed form needs a common beta")
    inv = 1.0 / (params.beta * LN2)
    z_star = (empirical_mean_gain(pop) * inv - params.n0) / (1.0 + params.alpha)
    p = inv - (params.alpha * z_star + params.n0) / pop.thetas
    outside = (p <= params.e_min) | (p >= params.e_max)
    if np.any(outside):
        raise TruncationBindsError(
            f"{int(outside.sum())} of {pop.n} users leave ({params.e_min}, {params.e_max}); "
            f"range [{p.min():.6g}, {p.max():.6g}]")
    return p


def brute_force_best_response(theta: float, z: float, params: ProtocolParams, grid_points: int,
                              user_index=None) -> float:
    """Grid argmax of the utility; ties go to the smaller power."""
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    grid = np.linspace(params.e_min, params.e_max, int(grid_points))
    u = utility(grid, theta, z, params, user_index)
    return float(grid[int(np.argmax(u))])


def _batch_interference(profiles: np.ndarray, thetas: np.ndarray, protocol: Protocol) -> np.ndarray:
    received = profiles * thetas
    n = thetas.size
    if protocol is Protocol.CDMA:
        return np.repeat(received.mean(axis=1, keepdims=True), n, axis=1)
    below = (thetas[:, None] < thetas[None, :]).astype(float)
    return received @ below / n


def tiny_equilibrium_search(pop: Population, params: ProtocolParams, protocol: Protocol | str,
                            grid_points: int = 100, chunk: int = 200_000) -> np.ndarray:
    """Exhaustive search of the N-fold power grid for a grid equilibrium.

    A profile qualifies when every user's grid power is the smallest grid
    argmax of its utility against the interference the profile induces.
    Because the utility is strictly concave in own power, the grid argmax is
    certified by comparing with the two neighbouring grid powers.  Cost is
    ``grid_points ** N``; intended for ``N <= 4``.
    """
    protocol = Protocol(protocol)
    if pop.n > 4:
        raise ValueError("exhaustive search is limited to N <= 4")
    if not 2 <= grid_points <= 200:
        raise ValueError("grid_points must be in [2, 200]")
    params.check_population(pop)
    grid = np.linspace(params.e_min, params.e_max, grid_points)
    th = pop.thetas
    n = pop.n

    total = grid_points**n
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, (grid_points,) * n), axis=1)
        a = grid[idx]
        z = _batch_interference(a, th, protocol)

        def u(k):
            return utility(grid[k], th, z, params)

        u_here = u(idx)
        lower_ok = np.where(idx > 0, u_here > u(np.maximum(idx - 1, 0)), True)
        upper_ok = np.where(idx < grid_points - 1, u_here >= u(np.minimum(idx + 1, grid_points - 1)), True)
        hits = np.flatnonzero(np.all(lower_ok & upper_ok, axis=1))
        if hits.size:
            return a[hits[0]].copy()
    raise NoGridEquilibriumError(f"no equilibrium on a {grid_points}-point grid for N={n}")


def search_with_grid_retry(pop: Population, params: ProtocolParams, protocol: Protocol | str,
                           grid_points: int = 61, attempts: int = 12) -> tuple[np.ndarray, int]:
    """Run :func:`tiny_equilibrium_search`, shifting the grid size until an equilibrium exists.

    Under CDMA a user's own power enters its interference, so a given grid
    may straddle the equilibrium without containing a grid fixed point.
    Returns the profile and the grid size that produced it.
    """
    last = None
    for k in range(attempts):
        points = grid_points + k
        if points > 200:
            break
        try:
            return tiny_equilibrium_search(pop, params, protocol, points), points
        except NoGridEquilibriumError as exc:
            last = exc
    raise last or NoGridEquilibriumError("no admissible grid size")


def grid_cell(params: ProtocolParams, grid_points: int) -> float:
    return (params.e_max - params.e_min) / (grid_points - 1)


__all__ = [
    "NoGridEquilibriumError",
    "NonScalarBetaError",
    "TruncationBindsError",
    "brute_force_best_response",
    "cdma_closed_form",
    "grid_cell",
    "search_with_grid_retry",
    "tiny_equilibrium_search",
]
