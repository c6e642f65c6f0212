"""L1 error against the heat kernel, seed averaging, and the iso-error search.

The iso-error search looks for the particle count at which the seed-averaged
final-time L1 error of the Brownianized heat equation hits a target value.
The error is noisy and only roughly monotone in N_p, so the search first
brackets the target by doubling and only then bisects.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import HeatKernel
from .field import DensityField
from .grid import GridSpec, Mode, SimParams
from .simulation import run

log = logging.getLogger(__name__)

ISO_ERROR_TARGET = 0.025
ISO_ERROR_TOLERANCE = 0.002
DEFAULT_SEEDS = 20


def l1_error(field, grid: GridSpec, kernel: HeatKernel, t: float) -> float:
    """sum_j |u(t, x^j) - field^j| * dx"""
    values = field.values if isinstance(field, DensityField) else np.asarray(field, dtype=float)
    return float(np.abs(kernel.density(t, grid.centers) - values).sum() * grid.dx)


@dataclass(frozen=True)
class ErrorReport:
    l1_distance: float
    n_seeds: int
    mean: float
    standard_error: float
    samples: tuple[float, ...] = ()


@dataclass(frozen=True)
class IsoErrorPoint:
    theta: float
    n_particles_required: int | None
    achieved_error: float
    standard_error: float
    n_seeds: int
    status: str = "converged"

    @property
    def reached(self) -> bool:
        return self.n_particles_required is not None


def summarize(errors) -> ErrorReport:
    errors = np.asarray(errors, dtype=float)
    n = errors.size
    mean = float(errors.mean())
    se = float(errors.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ErrorReport(mean, n, mean, se, tuple(float(e) for e in errors))


def final_error(params: SimParams, grid: GridSpec, field_init: str = "analytic") -> float:
    result = run(params, grid, field_init=field_init)
    return l1_error(result.solution, grid, HeatKernel(params.diffusion), grid.t_final)


def _final_error_job(args) -> float:
    return final_error(*args)


def averaged_error(
    params: SimParams,
    grid: GridSpec,
    n_seeds: int = DEFAULT_SEEDS,
    seed_base: int = 0,
    workers: int = 1,
    field_init: str = "analytic",
) -> ErrorReport:
    """Mean and standard error of the final L1 error over seeds seed_base .. seed_base + n_seeds - 1."""
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    jobs = [(dataclasses.replace(params, seed=seed_base + i), grid, field_init) for i in range(n_seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(_final_error_job, jobs))
    else:
        errors = [_final_error_job(job) for job in jobs]
    return summarize(errors)


def iso_error_search(
    theta: float,
    target: float = ISO_ERROR_TARGET,
    tolerance: float = ISO_ERROR_TOLERANCE,
    grid: GridSpec | None = None,
    diffusion: float = 0.5,
    n_seeds: int = DEFAULT_SEEDS,
    np_bounds: tuple[int, int] = (1, 1 << 20),
    seed_base: int = 0,
    workers: int = 1,
) -> IsoErrorPoint:
    """Smallest N_p whose seed-averaged PartialCouplingII error reaches ``target``.

    Returns early once a probe lands within ``tolerance`` of the target.
    Unreachable targets come back with ``n_particles_required=None`` and
    status ``"below_target_at_lower_bound"`` (the field alone already beats
    the target, e.g. theta=0) or ``"above_target_at_upper_bound"``.
    """
    if not target > 0:
        raise ValueError(f"target must be positive, got {target}")
    lo, hi = np_bounds
    if not 1 <= lo <= hi:
        raise ValueError(f"np_bounds must satisfy 1 <= low <= high, got {np_bounds}")
    if grid is None:
        from .grid import make_grid

        grid = make_grid()

    cache: dict[int, ErrorReport] = {}

    def probe(n_p: int) -> ErrorReport:
        if n_p not in cache:
            params = SimParams(diffusion, theta, n_p, seed_base, Mode.PARTIAL_COUPLING_II)
            cache[n_p] = averaged_error(params, grid, n_seeds, seed_base, workers)
            log.info("theta=%g N_p=%d E1=%.5f +- %.5f", theta, n_p, cache[n_p].mean, cache[n_p].standard_error)
        return cache[n_p]

    def point(n_p: int | None, report: ErrorReport, status: str) -> IsoErrorPoint:
        return IsoErrorPoint(theta, n_p, report.mean, report.standard_error, n_seeds, status)

    first = probe(lo)
    if abs(first.mean - target) <= tolerance:
        return point(lo, first, "converged")
    if first.mean < target:
        return point(None, first, "below_target_at_lower_bound")

    # doubling scan: `above` keeps error > target, `below` reaches it
    above = lo
    below = None
    n_p = lo
    while below is None:
        if n_p >= hi:
            return point(None, probe(hi), "above_target_at_upper_bound")
        n_p = min(2 * n_p, hi)
        report = probe(n_p)
        if abs(report.mean - target) <= tolerance:
            return point(n_p, report, "converged")
        if report.mean < target:
            below = n_p
        else:
            above = n_p

    while below - above > 1:
        mid = (above + below) // 2
        report = probe(mid)
        if abs(report.mean - target) <= tolerance:
            return point(mid, report, "converged")
        if report.mean < target:
            below = mid
        else:
            above = mid
    return point(below, probe(below), "bracket_collapsed")
