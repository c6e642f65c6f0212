"""Command-line entry point: ``blendsim {run,sweep,iso-error,figure,check}``.

Exit codes: 0 success, 2 invalid configuration, 3 CFL violation,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .analytic import HeatKernel
from .config import ConfigError, RunConfig, parse_config, render_config
from .figures import FIGURES, fmt, reproduce_figure, write_density, write_diagnostics, write_iso_error, write_trajectories
from .grid import CFLViolationError, Mode
from .metrics import ISO_ERROR_TARGET, ISO_ERROR_TOLERANCE, averaged_error, iso_error_search, l1_error
from .simulation import run, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CFL = 3
EXIT_RUNTIME = 4

log = logging.getLogger("blendsim")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("-c", "--config", type=Path, help="config file (key = value lines)")
    g = p.add_argument_group("run configuration (overrides the config file)")
    g.add_argument("--mode", choices=[m.value for m in Mode])
    g.add_argument("--theta", type=float)
    g.add_argument("--n-particles", type=int)
    g.add_argument("--diffusion", type=float)
    g.add_argument("--x-bound", type=float)
    g.add_argument("--n-cells", type=int)
    g.add_argument("--t-init", type=float)
    g.add_argument("--t-final", type=float)
    g.add_argument("--n-steps", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--n-seeds", type=int)
    g.add_argument("--crn", dest="common_random_numbers", action=argparse.BooleanOptionalAction, default=None,
                   help="draw both uniforms per particle per step in every mode")
    g.add_argument("--field-init", choices=["analytic", "particles"])
    g.add_argument("--snapshots", help="'final', 'all' or comma-separated step numbers")
    g.add_argument("--record-trajectories", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("-o", "--output-dir")


def _resolve(args) -> RunConfig:
    text = args.config.read_text() if args.config else ""
    keys = [
        "mode", "theta", "n_particles", "diffusion", "x_bound", "n_cells", "t_init", "t_final",
        "n_steps", "seed", "n_seeds", "common_random_numbers", "field_init", "snapshots",
        "record_trajectories", "output_dir",
    ]
    overrides = {k: getattr(args, k, None) for k in keys}
    return parse_config(text, **overrides)


def _announce(config: RunConfig, seeds):
    print("# resolved configuration")
    print(render_config(config), end="")
    print(f"# seeds: {', '.join(str(s) for s in seeds)}")


def cmd_run(args) -> int:
    config = _resolve(args)
    _announce(config, config.seeds)
    grid = config.grid()
    out = Path(config.output_dir)
    kernel = HeatKernel(config.diffusion)
    for seed in config.seeds:
        result = run(config.params(seed), grid, config.snapshot_policy(), config.field_init)
        stem = f"{config.mode.value}_seed{seed}"
        paths = [write_density(result, out / f"{stem}_density.csv"),
                 write_diagnostics(result, out / f"{stem}_diagnostics.csv")]
        if result.trajectories is not None:
            paths.append(write_trajectories(result, out / f"{stem}_trajectories.csv"))
        error = l1_error(result.solution, grid, kernel, grid.t_final)
        d = result.diagnostics
        print(f"seed={seed} E1={fmt(error)} mass_drift={fmt(d.mass_drift)}"
              + (f" min_phi={fmt(d.min_phi)}" if d.min_phi is not None else "")
              + (f" out_of_domain={int(d.out_of_domain[-1])}" if d.out_of_domain is not None else ""))
        for path in paths:
            print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _resolve(args)
    thetas = _floats(args.thetas) if args.thetas else [config.theta]
    counts = _ints(args.particles) if args.particles else [config.n_particles]
    _announce(config, config.seeds)
    grid = config.grid()
    path = Path(config.output_dir) / "sweep.csv"
    rows = []
    for theta in thetas:
        for n_p in counts:
            c = config.replace(theta=theta, n_particles=n_p)
            report = averaged_error(c.params(), grid, c.n_seeds, c.seed, args.workers, c.field_init)
            print(f"theta={theta:g} N_p={n_p} E1={report.mean:.6g} +- {report.standard_error:.3g}")
            rows.append((fmt(theta), n_p, fmt(report.mean), fmt(report.standard_error), report.n_seeds))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        out = csv.writer(handle, lineterminator="\n")
        out.writerow(("theta", "n_particles", "mean_error", "standard_error", "n_seeds"))
        out.writerows(rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_iso_error(args) -> int:
    config = _resolve(args)
    if args.n_seeds is None and args.config is None:
        config = config.replace(n_seeds=20)
    thetas = _floats(args.thetas)
    _announce(config, config.seeds)
    points = []
    for theta in thetas:
        p = iso_error_search(
            theta, args.target, args.tolerance, config.grid(), config.diffusion, config.n_seeds,
            (args.np_min, args.np_max), config.seed, args.workers,
        )
        required = p.n_particles_required if p.reached else "unreachable"
        print(f"theta={theta:g} N_p={required} E1={p.achieved_error:.6g} +- {p.standard_error:.3g} ({p.status})")
        points.append(p)
    path = write_iso_error(points, Path(config.output_dir) / "iso_error.csv")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_figure(args) -> int:
    config = _resolve(args)
    seeds = config.seeds if FIGURES[args.figure].kind != "iso-error" else [config.seed]
    _announce(config, seeds)
    for seed in seeds:
        paths = reproduce_figure(
            args.figure, config.output_dir, seed=seed, grid=config.grid(), diffusion=config.diffusion,
            n_particles=args.n_particles, theta=args.theta, n_seeds=args.iso_seeds, workers=args.workers,
        )
        for path in paths:
            print(f"wrote {path}")
    return EXIT_OK


def cmd_check(args) -> int:
    config = _resolve(args)
    _announce(config, config.seeds)
    params = config.params()
    from .simulation import effective_params

    cfl = validate(effective_params(params), config.grid())
    print(f"CFL: {cfl}")
    print("configuration ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blendsim", description="Blended particle and heat-equation simulations of 1D diffusion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation per seed and write its tables")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="seed-averaged error over a theta x N_p grid")
    _add_config_flags(p)
    p.add_argument("--thetas", help="comma-separated theta values")
    p.add_argument("--particles", help="comma-separated particle counts")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("iso-error", help="particle count reaching a target error, per theta")
    _add_config_flags(p)
    p.add_argument("--thetas", default="0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--target", type=float, default=ISO_ERROR_TARGET)
    p.add_argument("--tolerance", type=float, default=ISO_ERROR_TOLERANCE)
    p.add_argument("--np-min", type=int, default=1)
    p.add_argument("--np-max", type=int, default=1 << 20)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_iso_error)

    p = sub.add_parser("figure", help="write the data behind a figure panel")
    p.add_argument("figure", choices=list(FIGURES))
    _add_config_flags(p)
    p.add_argument("--iso-seeds", type=int, default=20, help="seeds per probe for fig2f")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("check", help="validate a configuration and report the CFL numbers")
    _add_config_flags(p)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CFLViolationError as exc:
        print(f"error: CFL: {exc}", file=sys.stderr)
        return EXIT_CFL
    except ValueError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: runtime: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
