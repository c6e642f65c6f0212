"""Blended Brownian-particle and heat-equation solvers.

The microscopic solver moves particles with a weak Euler random walk; the
macroscopic solver advances an explicit finite-difference heat equation.
A weight theta in [0, 1] blends the two, from fully macroscopic (0) to
fully microscopic (1).
"""

from .analytic import HeatKernel, exact_density, exact_macro_trajectory, exact_velocity, initial_field
from .config import ConfigError, RunConfig, parse_config, render_config
from .field import (
    DensityField,
    SourceTerm,
    blended_field_step,
    compute_source,
    fd_velocities,
    fd_velocity,
    heat_step,
)
from .grid import (
    CFLReport,
    CFLViolationError,
    GridSpec,
    Mode,
    SimParams,
    cell_index,
    cell_indices,
    check_cfl,
    make_grid,
)
from .metrics import ErrorReport, IsoErrorPoint, averaged_error, iso_error_search, l1_error
from .particles import (
    NoiseDraw,
    ParticleEnsemble,
    convex_demo_step,
    discrete_velocity,
    estimate_density,
    euler_step,
    regularized_step,
    sample_initial,
)
from .simulation import RunResult, SnapshotPolicy, run

__version__ = "0.1.0"
