"""Channel-gain distributions and finite user populations.

A user's identifier is its squared channel gain ``theta = |h|^2``.  A
:class:`Population` holds a finite sample of identifiers sorted ascending;
every downstream array (powers, interference, rates) is index-aligned to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from mfpc import rng as _rng

_NORMALIZATION_TOL = 1e-9
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class RayleighSquared:
    """Squared magnitude of a Rayleigh-faded gain.

    Density ``(1/sigma^2) exp(-x/sigma^2)`` on ``x >= 0``, i.e. exponential
    with mean ``sigma^2``.
    """

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"RayleighSquared requires sigma > 0, got {self.sigma}")

    @property
    def scale(self) -> float:
        return self.sigma**2

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.clip(x, 0, None) / self.scale) / self.scale, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-np.clip(x, 0, None) / self.scale), 0.0)

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.exponential(self.scale, size=n)

    def describe(self) -> str:
        return f"rayleigh_squared(sigma={self.sigma!r})"


@dataclass(frozen=True)
class BoundedUniform:
    """Uniform gain on ``[lo, hi]`` with ``0 < lo < hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("BoundedUniform bounds must be finite")
        if not 0 < self.lo < self.hi:
            raise ValueError(f"BoundedUniform requires 0 < lo < hi, got lo={self.lo}, hi={self.hi}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.uniform(self.lo, self.hi, size=n)

    def describe(self) -> str:
        return f"bounded_uniform(lo={self.lo!r}, hi={self.hi!r})"


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Density given at grid points, linear in between.

    The tabulated values must be non-negative and integrate to one (to
    within 1e-9).  Pass ``normalize=True`` to rescale a density that was
    truncated to a finite support.
    """

    grid: np.ndarray
    density: np.ndarray
    normalize: bool = field(default=False, repr=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        dens = np.array(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != dens.shape or grid.size < 2:
            raise ValueError("Tabulated needs matching 1-D grid and density with at least 2 points")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(dens)):
            raise ValueError("Tabulated grid and density must be finite")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("Tabulated grid must be strictly increasing")
        if grid[0] < 0:
            raise ValueError("channel gains are non-negative; grid must start at or above 0")
        if np.any(dens < 0):
            raise ValueError("Tabulated density must be non-negative")
        mass = float(_trapezoid(dens, grid))
        if mass <= 0:
            raise ValueError("Tabulated density has zero mass")
        if self.normalize:
            dens = dens / mass
        elif abs(mass - 1.0) > _NORMALIZATION_TOL:
            raise ValueError(f"Tabulated density integrates to {mass!r}, not 1 (use normalize=True)")
        grid.setflags(write=False)
        dens.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)

    def pdf(self, x):
        return np.interp(x, self.grid, self.density, left=0.0, right=0.0)

    def _segment_cdf(self) -> np.ndarray:
        h = np.diff(self.grid)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (self.density[:-1] + self.density[1:]))])
        return cum / cum[-1]

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        # Exact inversion of the piecewise-quadratic CDF.
        u = gen.random(n)
        cdf = self._segment_cdf()
        k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, self.grid.size - 2)
        x0, h = self.grid[k], self.grid[k + 1] - self.grid[k]
        f0, f1 = self.density[k], self.density[k + 1]
        total = np.sum(0.5 * np.diff(self.grid) * (self.density[:-1] + self.density[1:]))
        r = (u - cdf[k]) * total
        slope = (f1 - f0) / h
        # Root of slope/2 t^2 + f0 t = r in the cancellation-free form.
        disc = np.sqrt(np.clip(f0**2 + 2 * slope * r, 0, None))
        denom = f0 + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom > 0, 2 * r / denom, 0.0)
        return x0 + np.clip(t, 0, h)

    def describe(self) -> str:
        return f"tabulated(points={self.grid.size}, support=[{self.grid[0]!r}, {self.grid[-1]!r}])"


ChannelDistribution = Union[RayleighSquared, BoundedUniform, Tabulated]


def load_tabulated(path, normalize: bool = False) -> Tabulated:
    """Read a two-column ``grid density`` text file.

    Columns are whitespace-separated; ``#`` starts a comment.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return Tabulated(data[:, 0], data[:, 1], normalize=normalize)


@dataclass(frozen=True, eq=False)
class Population:
    """Sorted identifiers of a finite user population.

    ``thetas`` is read-only and ascending; position ``i`` is user ``i``
    everywhere in the package.
    """

    thetas: np.ndarray
    seed: int | None = None
    source: str = "explicit"

    def __post_init__(self):
        th = np.array(self.thetas, dtype=float).reshape(-1)
        if th.size == 0:
            raise ValueError("a population needs at least one user")
        if not np.all(np.isfinite(th)) or np.any(th <= 0):
            raise ValueError("identifiers must be finite and strictly positive")
        if np.any(np.diff(th) < 0):
            raise ValueError("identifiers must be sorted ascending (use Population.from_thetas)")
        th.setflags(write=False)
        object.__setattr__(self, "thetas", th)

    @classmethod
    def from_thetas(cls, thetas, seed=None, source="explicit") -> "Population":
        th = np.asarray(thetas, dtype=float).reshape(-1)
        return cls(th[np.argsort(th, kind="stable")], seed=seed, source=source)

    @property
    def n(self) -> int:
        return self.thetas.size

    def __len__(self):
        return self.thetas.size


def sample_population(dist: ChannelDistribution, n: int, seed: int) -> Population:
    """Draw ``n`` i.i.d. identifiers from ``dist`` and sort them.

    Deterministic in ``(dist, n, seed)``.  Draws equal to zero are redrawn,
    since a zero gain is not a valid player.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"population size must be a positive integer, got {n}")
    n = int(n)
    gen = _rng.stream(seed, "population")
    thetas = dist._draw(gen, n)
    bad = thetas <= 0
    while np.any(bad):
        thetas[bad] = dist._draw(gen, int(bad.sum()))
        bad = thetas <= 0
    return Population.from_thetas(thetas, seed=seed, source=dist.describe())


def first_moment(dist: ChannelDistribution) -> float:
    """Mean gain ``E[theta]``; exact for the tabulated (piecewise-linear) density."""
    if isinstance(dist, RayleighSquared):
        return dist.sigma**2
    if isinstance(dist, BoundedUniform):
        return 0.5 * (dist.lo + dist.hi)
    if isinstance(dist, Tabulated):
        x0, x1 = dist.grid[:-1], dist.grid[1:]
        f0, f1 = dist.density[:-1], dist.density[1:]
        h = x1 - x0
        mass = np.sum(0.5 * h * (f0 + f1))
        moment = np.sum(h / 6.0 * (x0 * (2 * f0 + f1) + x1 * (f0 + 2 * f1)))
        return float(moment / mass)
    raise TypeError(f"unsupported distribution {dist!r}")


def empirical_mean_gain(pop: Population) -> float:
    return float(np.mean(pop.thetas))
