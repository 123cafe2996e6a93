"""Centroidal Voronoi tessellation by the probabilistic generalized Lloyd method.

Voronoi cells are never built explicitly. Each iteration draws a fresh Monte
Carlo sample from the region's density, assigns every sample to its nearest
generator and moves generators toward the sample mean of their cell.

RNG draw order (fixed, so runs are reproducible bit for bit):

* ``sample_region`` works in batches. A batch of size ``b`` first draws a
  ``(b, 3)`` block of uniforms for the proposal coordinates, then ``(b,)``
  uniforms for the acceptance test. The first batch has ``b = count``; later
  batches have ``b = max(remaining, 256)``.
* ``lloyd_iterations`` with no initial points draws them with one
  ``sample_region`` call, then one ``sample_region`` call per iteration.

Centroid sums are accumulated with ``np.bincount`` (sequential in sample
order), so reductions do not depend on thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "RegionError",
    "RejectionStallError",
    "BarrierRegion",
    "DensityField",
    "UNIFORM",
    "LloydConfig",
    "LloydState",
    "LloydStep",
    "CellStats",
    "sample_region",
    "nearest_labels",
    "assign_to_nearest",
    "cell_stats",
    "lloyd_point_update",
    "lloyd_iterations",
    "lloyd_run",
    "coverage_cost",
    "cvt_gradient",
]

_MIN_BATCH = 256
_STALL_PROPOSALS = 1_000_000
_STALL_RATE = 1e-3


class RegionError(ValueError):
    pass


class RejectionStallError(RuntimeError):
    """Acceptance rate of the density sampler collapsed."""


@dataclass(frozen=True)
class BarrierRegion:
    """Axis-aligned box, possibly flat along some axes.

    A zero half-extent marks a collapsed axis: the region is then a planar
    (or line) surface and every point on it shares the center coordinate on
    that axis. The planar deployment area at fixed altitude is the box with
    ``half_extents[2] == 0``.
    """

    center: np.ndarray
    half_extents: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(3)
        h = np.array(self.half_extents, dtype=float).reshape(3)
        v = np.array(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(h)) and np.all(np.isfinite(v))):
            raise RegionError("region fields must be finite")
        if np.any(h < 0) or not np.any(h > 0):
            raise RegionError(f"half-extents must be >= 0 with one active axis, got {h}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)
        object.__setattr__(self, "velocity", v)

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_extents

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_extents

    @property
    def active_axes(self) -> np.ndarray:
        return self.half_extents > 0

    @property
    def is_surface(self) -> bool:
        return not bool(np.all(self.active_axes))

    def measure(self) -> float:
        """Length, area or volume over the active axes."""
        return float(np.prod(2.0 * self.half_extents[self.active_axes]))

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p >= self.lower - tol) & (p <= self.upper + tol), axis=1)

    def project(self, points) -> np.ndarray:
        """Closest point of the region (clip to the box; flat axes snap to center)."""
        p = np.asarray(points, dtype=float)
        return np.clip(p, self.lower, self.upper)

    def translated(self, offset) -> "BarrierRegion":
        return replace(self, center=self.center + np.asarray(offset, dtype=float))


@dataclass(frozen=True)
class DensityField:
    """Nonnegative density with a known upper bound on the region.

    ``func`` maps an ``(m, 3)`` array to ``(m,)`` values. ``func=None`` is the
    uniform density.
    """

    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    bound: float = 1.0

    def __call__(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.func is None:
            return np.ones(len(p))
        values = np.asarray(self.func(p), dtype=float).reshape(len(p))
        if np.any(values < 0):
            raise ValueError("density must be nonnegative")
        return values


UNIFORM = DensityField()


@dataclass(frozen=True)
class LloydConfig:
    n: int
    q_samples: Optional[int] = None
    alpha1: float = 0.0
    alpha2: float = 1.0
    beta1: float = 0.0
    beta2: float = 1.0
    max_iterations: int = 200
    movement_tolerance: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.q_samples is None:
            object.__setattr__(self, "q_samples", 200 * self.n)
        problems = self.problems()
        if problems:
            raise ValueError("invalid Lloyd config: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append("n must be >= 1")
        if self.q_samples < self.n:
            out.append("q_samples must be >= n")
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            out.append("alpha1 + alpha2 must equal 1")
        if abs(self.beta1 + self.beta2 - 1.0) > 1e-12:
            out.append("beta1 + beta2 must equal 1")
        if not self.alpha2 > 0:
            out.append("alpha2 must be > 0")
        if not self.beta2 > 0:
            out.append("beta2 must be > 0")
        if self.max_iterations < 1:
            out.append("max_iterations must be >= 1")
        if not self.movement_tolerance > 0:
            out.append("movement_tolerance must be > 0")
        return out


@dataclass
class LloydState:
    points: np.ndarray
    counters: np.ndarray


@dataclass(frozen=True)
class CellStats:
    """Sample count of one cell and its sample mean (``None`` when empty)."""

    count: int
    centroid: Optional[np.ndarray]

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass
class LloydStep:
    iteration: int
    points: np.ndarray
    counters: np.ndarray
    previous: np.ndarray
    counts: np.ndarray
    means: np.ndarray  # cell means, rows of empty cells are zero
    samples: np.ndarray
    movement: float

    @property
    def stats(self) -> list[CellStats]:
        return [CellStats(int(c), self.means[k].copy() if c else None) for k, c in enumerate(self.counts)]


def sample_region(region: BarrierRegion, density: DensityField, count: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample ``count`` points of ``density`` restricted to ``region``.

    Proposals are uniform in the box; a proposal ``q`` is kept when
    ``U * bound < density(q)``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    lo, width = region.lower, 2.0 * region.half_extents
    kept: list[np.ndarray] = []
    n_kept = 0
    proposed = 0
    batch = count
    while n_kept < count:
        q = rng.random((batch, 3))
        q *= width
        q += lo
        if density.func is None and density.bound <= 1.0:
            # uniform density never rejects, so skip the acceptance draw
            return q
        u = rng.random(batch)
        if density.func is None:
            mask = u * density.bound < 1.0
        else:
            mask = u * density.bound < density(q)
        kept.append(q[mask])
        n_kept += int(mask.sum())
        proposed += batch
        if proposed >= _STALL_PROPOSALS and n_kept < _STALL_RATE * proposed:
            raise RejectionStallError(
                f"accepted {n_kept} of {proposed} proposals; density is too concentrated"
            )
        batch = max(count - n_kept, _MIN_BATCH)
    return np.concatenate(kept)[:count]


def _sq_dists(s: np.ndarray, g: np.ndarray) -> np.ndarray:
    # explicit per-axis sum keeps equidistant ties exact
    d2 = (s[:, 0:1] - g[:, 0]) ** 2
    d2 += (s[:, 1:2] - g[:, 1]) ** 2
    d2 += (s[:, 2:3] - g[:, 2]) ** 2
    return d2


def _fast_labels(s: np.ndarray, g: np.ndarray) -> np.ndarray:
    # |s|^2 is constant per row, so argmin of |g|^2 - 2 s.g picks the nearest
    # generator. Rounding can break exact ties either way, which only matters
    # for constructed inputs, never for continuous samples.
    d = s @ (-2.0 * g.T)
    d += (g * g).sum(axis=1)
    return np.argmin(d, axis=1)


def nearest_labels(samples, generators) -> np.ndarray:
    """Index of the nearest generator for every sample; ties go to the lowest index."""
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    g = np.atleast_2d(np.asarray(generators, dtype=float))
    if len(g) == 0:
        raise ValueError("need at least one generator")
    return np.argmin(_sq_dists(s, g), axis=1)


def assign_to_nearest(samples, generators) -> list[np.ndarray]:
    labels = nearest_labels(samples, generators)
    return [np.flatnonzero(labels == k) for k in range(len(np.atleast_2d(generators)))]


def _cell_sums(samples: np.ndarray, labels: np.ndarray, n: int):
    counts = np.bincount(labels, minlength=n)
    sums = np.stack([np.bincount(labels, weights=samples[:, a], minlength=n) for a in range(3)], axis=1)
    return counts, sums


def cell_stats(samples, partition: Sequence[np.ndarray]) -> list[CellStats]:
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    out = []
    for idx in partition:
        idx = np.asarray(idx, dtype=int)
        if len(idx) == 0:
            out.append(CellStats(0, None))
        else:
            out.append(CellStats(len(idx), s[idx].sum(axis=0) / len(idx)))
    return out


def _update_weights(j, config: LloydConfig):
    w_old = (config.alpha1 * j + config.beta1) / (j + 1)
    w_new = (config.alpha2 * j + config.beta2) / (j + 1)
    return w_old, w_new


def lloyd_point_update(x_i, u_i, j_i: int, config: LloydConfig):
    """One generalized Lloyd move of a single point toward its cell mean."""
    if j_i < 1:
        raise ValueError("iteration counter must be >= 1")
    w_old, w_new = _update_weights(j_i, config)
    return w_old * np.asarray(x_i, dtype=float) + w_new * np.asarray(u_i, dtype=float), j_i + 1


def lloyd_iterations(region: BarrierRegion, density: DensityField, config: LloydConfig,
                     init=None, rng: Optional[np.random.Generator] = None) -> Iterator[LloydStep]:
    """Yield one :class:`LloydStep` per iteration until the stopping rule fires.

    Stops after the first iteration whose largest point movement is below
    ``config.movement_tolerance``, or after ``config.max_iterations``.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = config.n
    if init is None:
        x = sample_region(region, density, n, rng)
    else:
        x = region.project(np.asarray(init, dtype=float).reshape(n, 3))
    j = np.ones(n, dtype=np.int64)
    for it in range(1, config.max_iterations + 1):
        samples = sample_region(region, density, config.q_samples, rng)
        labels = _fast_labels(samples, x)
        counts, sums = _cell_sums(samples, labels, n)
        nonempty = counts > 0
        u = np.zeros_like(x)
        u[nonempty] = sums[nonempty] / counts[nonempty, None]
        w_old, w_new = _update_weights(j.astype(float), config)
        x_new = x.copy()
        x_new[nonempty] = w_old[nonempty, None] * x[nonempty] + w_new[nonempty, None] * u[nonempty]
        j = j + nonempty
        x_new = region.project(x_new)
        movement = float(np.max(np.linalg.norm(x_new - x, axis=1)))
        yield LloydStep(it, x_new, j.copy(), x, counts, u, samples, movement)
        x = x_new
        if movement < config.movement_tolerance:
            return


def lloyd_run(region: BarrierRegion, density: DensityField, config: LloydConfig,
              init=None, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Run the probabilistic Lloyd loop and return the final ``(n, 3)`` points."""
    last = None
    for last in lloyd_iterations(region, density, config, init=init, rng=rng):
        pass
    return last.points


def coverage_cost(generators, region: BarrierRegion, density: DensityField, eval_samples) -> float:
    """Monte Carlo coverage cost: mean squared distance to the nearest generator.

    ``eval_samples`` must already be drawn from ``density`` on ``region``; the
    density weighting is implicit in the sampling.
    """
    s = np.atleast_2d(np.asarray(eval_samples, dtype=float))
    if len(s) == 0:
        raise ValueError("eval_samples must be nonempty")
    g = np.atleast_2d(np.asarray(generators, dtype=float))
    return float(_sq_dists(s, g).min(axis=1).mean())


def cvt_gradient(generators, stats: Sequence[CellStats]) -> np.ndarray:
    """Per-generator ``M * (c - p)``; zero for empty cells."""
    g = np.atleast_2d(np.asarray(generators, dtype=float))
    out = np.zeros_like(g)
    for k, st in enumerate(stats):
        if not st.empty:
            out[k] = st.count * (st.centroid - g[k])
    return out
