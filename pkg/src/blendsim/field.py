"""Macroscopic solver: explicit heat step, particle source term, blended update,
and the finite-difference transport velocity read by coupled particles.

Boundary cells see a zero ghost value on the outside (homogeneous
Dirichlet). Field values are never clamped; negative densities can appear
under strong particle forcing and are left for the diagnostics to report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, cell_indices

DENSITY_FLOOR = 1e-12


@dataclass
class DensityField:
    values: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def mass(self, grid: GridSpec) -> float:
        return float(self.values.sum() * grid.dx)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass
class SourceTerm:
    """Per-cell rate S^j; ``values * dx * dt`` sums to the net in-domain mass change."""

    values: np.ndarray


def second_difference(phi: np.ndarray) -> np.ndarray:
    """phi[j+1] - 2 phi[j] + phi[j-1] with zero ghosts beyond both ends."""
    lap = -2.0 * phi
    lap[1:] += phi[:-1]
    lap[:-1] += phi[1:]
    return lap


def blended_field_step(
    field: DensityField,
    source: SourceTerm | None,
    grid: GridSpec,
    diffusion: float,
    theta: float,
) -> DensityField:
    """phi + dt * (theta * S + (1 - theta) * D/dx^2 * second difference).

    A missing source counts as zero, which makes ``theta=0`` the plain
    heat step bit for bit.
    """
    phi = field.values
    s = np.zeros_like(phi) if source is None else source.values
    rate = theta * s + (1.0 - theta) * (diffusion / grid.dx**2) * second_difference(phi)
    return DensityField(phi + grid.dt * rate, field.time_index + 1)


def heat_step(field: DensityField, grid: GridSpec, diffusion: float) -> DensityField:
    """Forward-time centered-space step; stable only for D*dt/dx^2 <= 1/2."""
    return blended_field_step(field, None, grid, diffusion, 0.0)


def source_from_counts(prev_counts: np.ndarray, next_counts: np.ndarray, grid: GridSpec, n_particles: int) -> SourceTerm:
    net = np.asarray(next_counts, dtype=float) - np.asarray(prev_counts, dtype=float)
    return SourceTerm(net / (n_particles * grid.dx * grid.dt))


def compute_source(prev_positions, next_positions, grid: GridSpec, n_particles: int) -> SourceTerm:
    """Rate of density change per cell from one particle step.

    Counting (entered - left) per cell is the same as differencing the
    occupation counts, which also handles jumps over several cells and
    exits through the domain boundary.
    """
    prev_positions = np.asarray(prev_positions, dtype=float)
    next_positions = np.asarray(next_positions, dtype=float)
    if prev_positions.shape != next_positions.shape:
        raise ValueError(
            f"position lists differ in length: {prev_positions.shape[0]} vs {next_positions.shape[0]}"
        )
    if n_particles <= 0:
        raise ValueError("n_particles must be positive")
    size = grid.n_cells + 1
    prev_counts = np.bincount(cell_indices(grid, prev_positions), minlength=size)[1:]
    next_counts = np.bincount(cell_indices(grid, next_positions), minlength=size)[1:]
    return source_from_counts(prev_counts, next_counts, grid, n_particles)


def fd_velocities(field: DensityField, grid: GridSpec, diffusion: float, x, floor: float = DENSITY_FLOOR) -> np.ndarray:
    """Vectorized -D (phi[j*+1] - phi[j*-1]) / (2 dx phi[j*]).

    j* is the cell holding x, pulled in to [2, n_cells - 1] so the stencil
    has both neighbours. Out-of-domain points and cells with phi[j*] below
    ``floor`` get velocity 0.
    """
    phi = field.values
    j = cell_indices(grid, x)
    jc = np.clip(j, 2, grid.n_cells - 1) - 1
    centre = phi[jc]
    grad = (phi[jc + 1] - phi[jc - 1]) / (2.0 * grid.dx)
    ok = (j > 0) & (centre >= floor)
    v = np.zeros(j.shape, dtype=float)
    np.divide(-diffusion * grad, centre, out=v, where=ok)
    return v


def fd_velocity(field: DensityField, grid: GridSpec, diffusion: float, x: float, floor: float = DENSITY_FLOOR) -> float:
    return float(fd_velocities(field, grid, diffusion, np.array([x], dtype=float), floor)[0])
