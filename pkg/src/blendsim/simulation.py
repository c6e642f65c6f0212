"""Time loop for every run mode."""

from __future__ import annotations

import dataclasses
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic import HeatKernel, initial_field
from .field import DensityField, blended_field_step, fd_velocities, heat_step, source_from_counts
from .grid import CFLReport, CFLViolationError, GridSpec, Mode, SimParams, check_cfl, out_of_domain_count
from .particles import (
    cell_counts,
    convex_demo_step,
    estimate_density,
    euler_step,
    regularized_step,
    sample_initial,
)

log = logging.getLogger(__name__)

FIELD_INIT_CHOICES = ("analytic", "particles")


@dataclass(frozen=True)
class SnapshotPolicy:
    """Which steps a run keeps.

    ``density_steps=None`` keeps only the final step. Trajectories cost
    ``(n_steps + 1) * n_particles`` floats, so keep them for small ensembles.
    """

    record_trajectories: bool = False
    density_steps: tuple[int, ...] | None = None

    @classmethod
    def record_all(cls, grid: GridSpec) -> "SnapshotPolicy":
        return cls(True, tuple(range(grid.n_steps + 1)))

    @classmethod
    def final_only(cls) -> "SnapshotPolicy":
        return cls()

    def steps(self, grid: GridSpec) -> set[int]:
        wanted = set(self.density_steps or ())
        wanted.add(grid.n_steps)
        return wanted


@dataclass
class Diagnostics:
    times: np.ndarray
    total_mass: np.ndarray
    field_mass: np.ndarray | None
    particle_mass: np.ndarray | None
    out_of_domain: np.ndarray | None
    min_phi: float | None
    cfl: CFLReport

    @property
    def mass_drift(self) -> float:
        return float(self.total_mass[-1] - self.total_mass[0])


@dataclass
class RunResult:
    params: SimParams
    grid: GridSpec
    diagnostics: Diagnostics
    density_snapshots: dict[int, DensityField] = field(default_factory=dict)
    psi_snapshots: dict[int, DensityField] = field(default_factory=dict)
    psi_final: DensityField | None = None
    trajectories: np.ndarray | None = None
    final_positions: np.ndarray | None = None
    quadratic_variation: np.ndarray | None = None
    field_init: str = "analytic"

    @property
    def final_field(self) -> DensityField | None:
        return self.density_snapshots.get(self.grid.n_steps)

    @property
    def solution(self) -> DensityField:
        """The density a mode is judged by: phi if a field evolves, else psi."""
        if self.final_field is not None:
            return self.final_field
        if self.psi_final is None:
            raise ValueError("run recorded neither a field nor a particle density")
        return self.psi_final


def effective_params(params: SimParams) -> SimParams:
    """Pin theta for the pure modes: MicroOnly runs at theta=1, MacroOnly at theta=0 with no particles."""
    if params.mode is Mode.MICRO_ONLY:
        return dataclasses.replace(params, theta=1.0)
    if params.mode is Mode.MACRO_ONLY:
        return dataclasses.replace(params, theta=0.0, n_particles=0)
    return params


def _needs_particles(params: SimParams) -> bool:
    if params.mode in (Mode.PARTIAL_COUPLING_II, Mode.FULL_COUPLING):
        return params.theta > 0
    return params.mode.evolves_particles


def validate(params: SimParams, grid: GridSpec) -> CFLReport:
    """Cross-field checks that need both params and grid; returns the CFL report."""
    cfl = check_cfl(grid, params)
    if _needs_particles(params) and params.n_particles == 0:
        raise ValueError(f"mode {params.mode.value} with theta={params.theta} needs n_particles > 0")
    if params.mode in (Mode.MACRO_ONLY, Mode.PARTIAL_COUPLING_II) and not cfl.satisfied:
        raise CFLViolationError(f"{params.mode.value} requires the parabolic CFL condition: {cfl}")
    if params.mode is Mode.FULL_COUPLING and not cfl.satisfied:
        warnings.warn(f"FullCoupling run violates the parabolic CFL condition: {cfl}", RuntimeWarning, stacklevel=3)
    return cfl


def run(
    params: SimParams,
    grid: GridSpec,
    snapshot_policy: SnapshotPolicy | None = None,
    field_init: str = "analytic",
) -> RunResult:
    """Advance ``grid.n_steps`` steps from ``t_init`` to ``t_final`` in ``params.mode``.

    ``field_init`` selects the starting field of the coupled modes: the
    exact kernel on the cell centers ("analytic") or the histogram of the
    initial particles ("particles").
    """
    if field_init not in FIELD_INIT_CHOICES:
        raise ValueError(f"field_init must be one of {FIELD_INIT_CHOICES}, got {field_init!r}")
    policy = snapshot_policy or SnapshotPolicy()
    params = effective_params(params)
    cfl = validate(params, grid)
    mode = params.mode
    theta = params.theta
    diffusion = params.diffusion
    n_p = params.n_particles
    nt = grid.n_steps
    dt = grid.dt
    kernel = HeatKernel(diffusion)
    keep = policy.steps(grid)

    has_particles = mode.evolves_particles
    has_field = mode.evolves_field

    ensemble = sample_initial(params, grid)
    # per-step cell counts are only needed when a field consumes the particle moves
    track_counts = has_field and n_p > 0
    counts = cell_counts(grid, ensemble.positions)[0] if track_counts else None

    phi = None
    if has_field:
        if field_init == "particles" and n_p > 0:
            phi = estimate_density(ensemble, grid, n_p)[0]
        else:
            phi = initial_field(kernel, grid)

    result = RunResult(params, grid, diagnostics=None, field_init=field_init)  # type: ignore[arg-type]
    field_mass = np.empty(nt + 1) if has_field else None
    particle_mass = np.empty(nt + 1) if has_particles else None
    out_of_domain = np.zeros(nt + 1, dtype=np.int64) if has_particles else None
    min_phi = np.inf
    trajectories = None
    if has_particles and policy.record_trajectories:
        trajectories = np.empty((nt + 1, n_p))
    qv = np.zeros(n_p) if has_particles else None

    def record(n: int):
        nonlocal min_phi
        if has_field:
            field_mass[n] = phi.mass(grid)
            min_phi = min(min_phi, float(phi.values.min()))
            if n in keep:
                result.density_snapshots[n] = DensityField(phi.values.copy(), n)
        if has_particles:
            if track_counts:
                out_of_domain[n] = n_p - int(counts.sum())
            else:
                out_of_domain[n] = out_of_domain_count(grid, ensemble.positions)
            particle_mass[n] = (n_p - out_of_domain[n]) / n_p if n_p > 0 else 0.0
            if trajectories is not None:
                trajectories[n] = ensemble.positions
            if n in keep and n_p > 0:
                if track_counts:
                    result.psi_snapshots[n] = DensityField(counts / (n_p * grid.dx), n)
                else:
                    result.psi_snapshots[n] = estimate_density(ensemble, grid, n_p)[0]

    def analytic_velocity(t, y):
        return kernel.velocity(t, y)

    def field_velocity(t, y):
        return fd_velocities(phi, grid, diffusion, y)

    record(0)
    for n in range(nt):
        t_n = grid.time(n)
        prev = ensemble.positions
        if mode is Mode.MICRO_ONLY:
            ensemble = euler_step(ensemble, params, dt)
        elif mode is Mode.PARTIAL_COUPLING_I:
            ensemble = regularized_step(ensemble, params, t_n, dt, analytic_velocity)
        elif mode is Mode.PARTIAL_COUPLING_I_CONVEX_DEMO:
            ensemble = convex_demo_step(ensemble, params, t_n, dt)
        elif mode is Mode.PARTIAL_COUPLING_II:
            ensemble = euler_step(ensemble, params, dt)
        elif mode is Mode.FULL_COUPLING:
            # particles read phi_n before the field consumes their move
            ensemble = regularized_step(ensemble, params, t_n, dt, field_velocity)

        if has_particles:
            qv += np.square(ensemble.positions - prev)
            if track_counts:
                new_counts = cell_counts(grid, ensemble.positions)[0]
        if has_field:
            if mode is Mode.MACRO_ONLY:
                phi = heat_step(phi, grid, diffusion)
            else:
                source = source_from_counts(counts, new_counts, grid, n_p) if track_counts else None
                phi = blended_field_step(phi, source, grid, diffusion, theta)
        if track_counts:
            counts = new_counts
        record(n + 1)

    particle_mass_arr = particle_mass if has_particles else None
    total = field_mass if has_field else particle_mass_arr
    result.diagnostics = Diagnostics(
        times=grid.times,
        total_mass=total,
        field_mass=field_mass,
        particle_mass=particle_mass_arr,
        out_of_domain=out_of_domain,
        min_phi=min_phi if has_field else None,
        cfl=cfl,
    )
    if has_particles:
        result.trajectories = trajectories
        result.final_positions = ensemble.positions
        result.quadratic_variation = qv
        if n_p > 0:
            result.psi_final = result.psi_snapshots[nt]
    log.debug("finished %s theta=%g N_p=%d seed=%d", mode.value, theta, n_p, params.seed)
    return result
