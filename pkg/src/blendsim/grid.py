"""Space-time grid, physical parameters and the CFL check.

Cells are ``E^j = [x^j - dx/2, x^j + dx/2)`` with centers
``x^j = -x_bound + (j - 1/2) dx`` for ``j = 1..n_cells``. Cell indices are
1-based everywhere in the public API; arrays are 0-based internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Defaults used for every reproduction run.
X_BOUND = 8.0
N_CELLS = 50
T_INIT = 0.5
T_FINAL = 5.0
N_STEPS = 500
DIFFUSION = 0.5


class Mode(str, Enum):
    MICRO_ONLY = "MicroOnly"
    MACRO_ONLY = "MacroOnly"
    PARTIAL_COUPLING_I = "PartialCouplingI"
    PARTIAL_COUPLING_I_CONVEX_DEMO = "PartialCouplingI_ConvexDemo"
    PARTIAL_COUPLING_II = "PartialCouplingII"
    FULL_COUPLING = "FullCoupling"

    @property
    def evolves_particles(self) -> bool:
        return self is not Mode.MACRO_ONLY

    @property
    def evolves_field(self) -> bool:
        return self in (Mode.MACRO_ONLY, Mode.PARTIAL_COUPLING_II, Mode.FULL_COUPLING)


@dataclass(frozen=True)
class GridSpec:
    x_bound: float
    n_cells: int
    t_init: float
    t_final: float
    n_steps: int
    dx: float = field(init=False)
    dt: float = field(init=False)

    def __post_init__(self):
        if not self.x_bound > 0:
            raise ValueError(f"x_bound must be positive, got {self.x_bound}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 3:
            raise ValueError(f"n_cells must be an integer >= 3, got {self.n_cells}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be an integer >= 1, got {self.n_steps}")
        if not self.t_init > 0:
            raise ValueError(
                f"t_init must be > 0 (the Dirac initial datum is not representable), got {self.t_init}"
            )
        if not self.t_final > self.t_init:
            raise ValueError(f"t_final must exceed t_init, got t_init={self.t_init}, t_final={self.t_final}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "dx", 2.0 * self.x_bound / self.n_cells)
        object.__setattr__(self, "dt", (self.t_final - self.t_init) / self.n_steps)

    @property
    def centers(self) -> np.ndarray:
        """Cell centers x^1..x^N as a float array of length ``n_cells``."""
        j = np.arange(1, self.n_cells + 1)
        return -self.x_bound + (j - 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        """The ``n_cells + 1`` cell edges; the outer two are exactly +-x_bound."""
        e = -self.x_bound + np.arange(self.n_cells + 1) * self.dx
        e[0] = -self.x_bound
        e[-1] = self.x_bound
        return e

    def time(self, n: int) -> float:
        """Time node t_n; ``time(n_steps)`` is exactly ``t_final``."""
        if n == self.n_steps:
            return self.t_final
        return self.t_init + n * self.dt

    @property
    def times(self) -> np.ndarray:
        t = self.t_init + np.arange(self.n_steps + 1) * self.dt
        t[-1] = self.t_final
        return t


def make_grid(
    x_bound: float = X_BOUND,
    n_cells: int = N_CELLS,
    t_init: float = T_INIT,
    t_final: float = T_FINAL,
    n_steps: int = N_STEPS,
) -> GridSpec:
    return GridSpec(x_bound, n_cells, t_init, t_final, n_steps)


@dataclass(frozen=True)
class SimParams:
    diffusion: float = DIFFUSION
    theta: float = 1.0
    n_particles: int = 0
    seed: int = 0
    mode: Mode = Mode.MICRO_ONLY
    common_random_numbers: bool = True

    def __post_init__(self):
        if not self.diffusion > 0:
            raise ValueError(f"diffusion must be positive, got {self.diffusion}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if int(self.n_particles) != self.n_particles or self.n_particles < 0:
            raise ValueError(f"n_particles must be a non-negative integer, got {self.n_particles}")
        object.__setattr__(self, "n_particles", int(self.n_particles))
        object.__setattr__(self, "mode", Mode(self.mode))


def cell_indices(grid: GridSpec, x) -> np.ndarray:
    """Vectorized cell lookup: 1-based index, or 0 for points outside [-x_b, x_b).

    NaN positions map to 0 as well. A floor-based guess is corrected by one
    comparison against the stored edges on each side, so the result always
    agrees with ``grid.edges``.
    """
    x = np.asarray(x, dtype=float)
    n = grid.n_cells
    # region r: 0 below the domain, 1..n the cells, n+1 at or above x_bound
    lower = np.concatenate(([-np.inf], grid.edges, [np.inf]))
    nan = np.isnan(x)
    guess = (x + grid.x_bound) * (1.0 / grid.dx)
    if nan.any():
        guess[nan] = 0.0
    np.floor(guess, out=guess)
    np.clip(guess, -1.0, n, out=guess)
    r = guess.astype(np.intp) + 1
    r -= x < lower[r]
    r += x >= lower[r + 1]
    r[(r > n) | nan] = 0
    return r


def out_of_domain_count(grid: GridSpec, x) -> int:
    x = np.asarray(x, dtype=float)
    inside = (x >= -grid.x_bound) & (x < grid.x_bound)
    return int(x.size - np.count_nonzero(inside))


def cell_index(grid: GridSpec, x: float) -> int | None:
    """1-based index of the cell containing ``x``, or None if out of domain."""
    j = int(cell_indices(grid, np.array([x]))[0])
    return j or None


@dataclass(frozen=True)
class CFLReport:
    ratio: float
    satisfied: bool
    particle_step: float
    particle_satisfied: bool

    def __str__(self) -> str:
        flag = "ok" if self.satisfied else "VIOLATED"
        return (
            f"D*dt/dx^2 = {self.ratio:.6g} ({flag}, limit 0.5); "
            f"sqrt(2*D*dt) = {self.particle_step:.6g} vs dx"
            f" ({'ok' if self.particle_satisfied else 'VIOLATED'})"
        )


def check_cfl(grid: GridSpec, params: SimParams) -> CFLReport:
    ratio = params.diffusion * grid.dt / grid.dx**2
    step = math.sqrt(2.0 * params.diffusion * grid.dt)
    return CFLReport(ratio, ratio <= 0.5, step, step <= grid.dx)


class CFLViolationError(ValueError):
    pass
