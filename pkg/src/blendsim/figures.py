"""Tabular data behind each reproduced figure.

Files are comma-separated with a header row; floats are written with 17
significant digits so they round-trip to the same binary value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytic import HeatKernel
from .grid import GridSpec, Mode, SimParams, make_grid
from .metrics import IsoErrorPoint, iso_error_search
from .simulation import RunResult, SnapshotPolicy, run

TRAJECTORY_COLUMNS = ("n", "t_n", "k", "y")
DENSITY_COLUMNS = ("j", "x", "value", "exact")
ISO_ERROR_COLUMNS = ("theta", "n_particles_required", "achieved_error", "standard_error", "n_seeds", "status")
DIAGNOSTIC_COLUMNS = ("n", "t_n", "total_mass", "out_of_domain")


class FigureDataError(ValueError):
    pass


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = path.open("w", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def write_trajectories(result: RunResult, path) -> Path:
    if result.trajectories is None:
        raise FigureDataError("trajectory data needs a run recorded with record_trajectories=True")
    path = Path(path)
    times = result.grid.times
    handle, out = _writer(path)
    with handle:
        out.writerow(TRAJECTORY_COLUMNS)
        for n, row in enumerate(result.trajectories):
            t = fmt(times[n])
            for k, y in enumerate(row):
                out.writerow((n, t, k + 1, fmt(y)))
    return path


def write_density(result: RunResult, path, step: int | None = None) -> Path:
    """Per-cell density at ``step`` (default: final) next to the exact kernel."""
    grid = result.grid
    step = grid.n_steps if step is None else step
    field = result.density_snapshots.get(step)
    if field is None:
        field = result.psi_snapshots.get(step)
    if field is None:
        raise FigureDataError(f"run has no density snapshot at step {step}")
    exact = HeatKernel(result.params.diffusion).density(grid.time(step), grid.centers)
    path = Path(path)
    handle, out = _writer(path)
    with handle:
        out.writerow(DENSITY_COLUMNS)
        for j, (x, value, u) in enumerate(zip(grid.centers, field.values, exact), start=1):
            out.writerow((j, fmt(x), fmt(value), fmt(u)))
    return path


def write_diagnostics(result: RunResult, path) -> Path:
    d = result.diagnostics
    ood = d.out_of_domain if d.out_of_domain is not None else np.zeros(len(d.times), dtype=int)
    path = Path(path)
    handle, out = _writer(path)
    with handle:
        out.writerow(DIAGNOSTIC_COLUMNS)
        for n, (t, m, o) in enumerate(zip(d.times, d.total_mass, ood)):
            out.writerow((n, fmt(t), fmt(m), int(o)))
    return path


def write_iso_error(points: list[IsoErrorPoint], path) -> Path:
    path = Path(path)
    handle, out = _writer(path)
    with handle:
        out.writerow(ISO_ERROR_COLUMNS)
        for p in points:
            required = "" if p.n_particles_required is None else p.n_particles_required
            out.writerow((fmt(p.theta), required, fmt(p.achieved_error), fmt(p.standard_error), p.n_seeds, p.status))
    return path


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


@dataclass(frozen=True)
class FigureSpec:
    """One panel: a run recipe and which table it produces."""

    mode: Mode
    theta: float
    n_particles: int
    kind: str  # "trajectories" | "density" | "iso-error"


FIGURES: dict[str, FigureSpec] = {
    "fig1a": FigureSpec(Mode.PARTIAL_COUPLING_I, 1.0, 100, "trajectories"),
    "fig1b": FigureSpec(Mode.PARTIAL_COUPLING_I, 0.2, 100, "trajectories"),
    "fig1c": FigureSpec(Mode.PARTIAL_COUPLING_I, 0.0, 100, "trajectories"),
    "fig1d": FigureSpec(Mode.PARTIAL_COUPLING_I, 1.0, 500_000, "density"),
    "fig2a": FigureSpec(Mode.PARTIAL_COUPLING_II, 1.0, 100, "density"),
    "fig2b": FigureSpec(Mode.PARTIAL_COUPLING_II, 1.0, 1000, "density"),
    "fig2c": FigureSpec(Mode.PARTIAL_COUPLING_II, 1.0, 100_000, "density"),
    "fig2d": FigureSpec(Mode.PARTIAL_COUPLING_II, 0.5, 100, "density"),
    "fig2e": FigureSpec(Mode.PARTIAL_COUPLING_II, 0.5, 1000, "density"),
    "fig2f": FigureSpec(Mode.PARTIAL_COUPLING_II, 1.0, 0, "iso-error"),
    "fig3a": FigureSpec(Mode.FULL_COUPLING, 0.8, 100, "trajectories"),
    "fig3b": FigureSpec(Mode.FULL_COUPLING, 0.5, 100, "trajectories"),
    "fig3c": FigureSpec(Mode.FULL_COUPLING, 0.2, 100, "trajectories"),
    "fig3d": FigureSpec(Mode.FULL_COUPLING, 0.8, 100, "density"),
    "fig3e": FigureSpec(Mode.FULL_COUPLING, 0.5, 100, "density"),
    "fig3f": FigureSpec(Mode.FULL_COUPLING, 0.2, 100, "density"),
}

ISO_ERROR_THETAS = (0.2, 0.4, 0.6, 0.8, 1.0)


def emit_figure_data(result: RunResult, figure_id: str, out_dir) -> list[Path]:
    """Write the table(s) a figure needs from a finished run.

    ``figure_id`` is a panel name (``fig1a`` ...) or a table kind
    (``trajectories`` / ``density``).
    """
    kind = FIGURES[figure_id].kind if figure_id in FIGURES else figure_id
    out_dir = Path(out_dir)
    seed = result.params.seed
    if kind == "trajectories":
        return [write_trajectories(result, out_dir / f"{figure_id}_trajectories_seed{seed}.csv")]
    if kind == "density":
        return [write_density(result, out_dir / f"{figure_id}_density_seed{seed}.csv")]
    if kind == "iso-error":
        raise FigureDataError("iso-error data comes from iso_error_search, not a single run; use reproduce_figure")
    raise FigureDataError(f"unknown figure or table kind {figure_id!r}")


def reproduce_figure(
    figure_id: str,
    out_dir,
    seed: int = 0,
    grid: GridSpec | None = None,
    diffusion: float = 0.5,
    n_particles: int | None = None,
    theta: float | None = None,
    n_seeds: int = 20,
    workers: int = 1,
) -> list[Path]:
    """Run a panel's recipe (optionally overriding N_p / theta) and write its data."""
    if figure_id not in FIGURES:
        raise FigureDataError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}")
    spec = FIGURES[figure_id]
    grid = grid or make_grid()
    out_dir = Path(out_dir)
    if spec.kind == "iso-error":
        thetas = ISO_ERROR_THETAS if theta is None else (theta,)
        points = [
            iso_error_search(th, grid=grid, diffusion=diffusion, n_seeds=n_seeds, seed_base=seed, workers=workers)
            for th in thetas
        ]
        return [write_iso_error(points, out_dir / f"{figure_id}_iso_error.csv")]
    params = SimParams(
        diffusion,
        spec.theta if theta is None else theta,
        spec.n_particles if n_particles is None else n_particles,
        seed,
        spec.mode,
    )
    policy = SnapshotPolicy(record_trajectories=spec.kind == "trajectories")
    result = run(params, grid, policy)
    return emit_figure_data(result, figure_id, out_dir)
