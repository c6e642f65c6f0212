"""Microscopic solver: weak Euler random walk and its blended variants.

All randomness for a run comes from one ``numpy.random.Generator`` seeded
with ``SimParams.seed`` and consumed in a fixed order: one uniform per
particle for the initial sample, then per step, particle by particle,
a branch uniform followed by a sign uniform. With
``common_random_numbers`` off, steps that never branch draw only the sign
uniform, which breaks bit-alignment between modes but halves the draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .field import DensityField
from .grid import GridSpec, SimParams, cell_indices

VelocityOracle = Callable[[float, np.ndarray], np.ndarray]

# rng.random() returns k * 2**-53; shifting by half a lattice step keeps the
# uniform strictly inside (0, 1) so the inverse normal CDF stays finite.
_HALF_ULP = 2.0**-54


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    time_index: int
    rng: np.random.Generator

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class NoiseDraw:
    """Per-particle randomness for one step."""

    branch_uniform: np.ndarray | None
    sign_bit: np.ndarray

    @classmethod
    def draw(cls, rng: np.random.Generator, n: int, full: bool = True) -> "NoiseDraw":
        if full:
            u = rng.random((n, 2))
            return cls(u[:, 0], np.where(u[:, 1] < 0.5, 1.0, -1.0))
        return cls(None, np.where(rng.random(n) < 0.5, 1.0, -1.0))


def brownian_increment(diffusion: float, dt: float) -> float:
    return math.sqrt(2.0 * diffusion) * math.sqrt(dt)


def discrete_velocity(sign_bit, diffusion: float, dt: float):
    """A-posteriori particle speed of a weak Euler step; diverges like dt**-1/2."""
    return np.asarray(sign_bit) * brownian_increment(diffusion, dt) / dt


def sample_initial(params: SimParams, grid: GridSpec) -> ParticleEnsemble:
    """Draw ``n_particles`` positions from the heat kernel at ``grid.t_init``."""
    rng = np.random.default_rng(params.seed)
    sigma = math.sqrt(2.0 * params.diffusion * grid.t_init)
    u = rng.random(params.n_particles) + _HALF_ULP
    return ParticleEnsemble(sigma * ndtri(u), 0, rng)


def _advance(ensemble: ParticleEnsemble, positions: np.ndarray) -> ParticleEnsemble:
    return ParticleEnsemble(positions, ensemble.time_index + 1, ensemble.rng)


def euler_step(ensemble: ParticleEnsemble, params: SimParams, dt: float) -> ParticleEnsemble:
    h = brownian_increment(params.diffusion, dt)
    noise = NoiseDraw.draw(ensemble.rng, ensemble.n_particles, params.common_random_numbers)
    y = ensemble.positions
    return _advance(ensemble, y + np.where(noise.sign_bit > 0, h, -h))


def regularized_step(
    ensemble: ParticleEnsemble,
    params: SimParams,
    t_n: float,
    dt: float,
    velocity_source: VelocityOracle,
) -> ParticleEnsemble:
    """Each particle independently takes a Brownian step with probability theta
    and a deterministic drift step ``velocity_source(t_n, y) * dt`` otherwise.

    Both uniforms are always drawn so that the stream stays aligned with
    ``euler_step`` under common random numbers.
    """
    h = brownian_increment(params.diffusion, dt)
    noise = NoiseDraw.draw(ensemble.rng, ensemble.n_particles, full=True)
    y = ensemble.positions
    micro = noise.branch_uniform < params.theta
    if micro.all():
        return _advance(ensemble, y + np.where(noise.sign_bit > 0, h, -h))
    with np.errstate(all="ignore"):
        drift = np.asarray(velocity_source(t_n, y), dtype=float) * dt
    moved = np.where(micro, y + np.where(noise.sign_bit > 0, h, -h), y + drift)
    return _advance(ensemble, moved)


def convex_demo_step(ensemble: ParticleEnsemble, params: SimParams, t_n: float, dt: float) -> ParticleEnsemble:
    """Convex combination of Brownian and drift displacement.

    Kept as a known-bad scheme: for 0 < theta < 1 the Brownian kick is
    shrunk by theta while the drift is shrunk by 1 - theta, so the spread
    grows too slowly and the variance misses 2*D*t.
    """
    theta = params.theta
    h = brownian_increment(params.diffusion, dt)
    noise = NoiseDraw.draw(ensemble.rng, ensemble.n_particles, params.common_random_numbers)
    y = ensemble.positions
    if theta == 1.0:
        return _advance(ensemble, y + np.where(noise.sign_bit > 0, h, -h))
    if theta == 0.0:
        return _advance(ensemble, y + y / (2.0 * t_n) * dt)
    return _advance(ensemble, y + theta * noise.sign_bit * h + (1.0 - theta) * (y / (2.0 * t_n)) * dt)


def cell_counts(grid: GridSpec, positions) -> tuple[np.ndarray, int]:
    """Particle counts per cell (0-based array of length n_cells) and the out-of-domain count."""
    j = cell_indices(grid, positions)
    counts = np.bincount(j, minlength=grid.n_cells + 1)
    return counts[1:], int(counts[0])


def estimate_density(ensemble, grid: GridSpec, n_particles: int) -> tuple[DensityField, int]:
    """Histogram density count / (n_particles * dx).

    ``n_particles`` is the fixed normalization, so mass leaving the domain
    is lost from the estimate rather than redistributed. Accepts an
    ensemble or a bare position array.
    """
    if n_particles <= 0:
        raise ValueError("n_particles must be positive to normalize the histogram")
    positions = getattr(ensemble, "positions", ensemble)
    time_index = getattr(ensemble, "time_index", 0)
    counts, outside = cell_counts(grid, positions)
    return DensityField(counts / (n_particles * grid.dx), time_index), outside
