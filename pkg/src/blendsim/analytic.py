"""Closed-form heat kernel, its transport velocity, and the pure-drift trajectory."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import DensityField
from .grid import GridSpec


def _require_positive_time(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError(f"time must be > 0, got {t}")


@dataclass(frozen=True)
class HeatKernel:
    """Fundamental solution of u_t = D u_xx started from a unit Dirac mass at 0."""

    diffusion: float = 0.5

    def __post_init__(self):
        if not self.diffusion > 0:
            raise ValueError(f"diffusion must be positive, got {self.diffusion}")

    def density(self, t, x):
        _require_positive_time(t)
        four_dt = 4.0 * self.diffusion * np.asarray(t, dtype=float)
        return np.exp(-np.square(x) / four_dt) / np.sqrt(np.pi * four_dt)

    def velocity(self, t, x):
        """Transport velocity -D u_x / u, which is x / (2t) for this kernel."""
        _require_positive_time(t)
        return np.asarray(x, dtype=float) / (2.0 * np.asarray(t, dtype=float))


def exact_density(kernel: HeatKernel, t, x):
    return kernel.density(t, x)


def exact_velocity(kernel: HeatKernel, t, x):
    return kernel.velocity(t, x)


def exact_macro_trajectory(t_init: float, y_init, t):
    """Solution of dY/dt = Y/(2t) through (t_init, y_init): y_init * sqrt(t / t_init)."""
    if not t_init > 0:
        raise ValueError(f"t_init must be > 0, got {t_init}")
    if np.any(np.asarray(t) < t_init):
        raise ValueError(f"t must be >= t_init={t_init}, got {t}")
    return np.asarray(y_init, dtype=float) * np.sqrt(np.asarray(t, dtype=float) / t_init)


def initial_field(kernel: HeatKernel, grid: GridSpec):
    """Point values of the kernel at t_init on the cell centers."""
    return DensityField(kernel.density(grid.t_init, grid.centers), 0)
