"""Run configuration files.

A config is INI text with ``key = value`` lines; the ``[run]`` section
header is optional. Unset keys take the reproduction defaults::

    # blended heat equation, 20 seeds
    mode = PartialCouplingII
    theta = 0.5
    n_particles = 100
    seed = 0
    n_seeds = 20
    snapshots = final
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass

from . import grid as g
from .grid import GridSpec, Mode, SimParams
from .simulation import FIELD_INIT_CHOICES, SnapshotPolicy

SECTION = "run"


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field name."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    mode: Mode = Mode.MACRO_ONLY
    theta: float = 1.0
    n_particles: int = 0
    diffusion: float = g.DIFFUSION
    x_bound: float = g.X_BOUND
    n_cells: int = g.N_CELLS
    t_init: float = g.T_INIT
    t_final: float = g.T_FINAL
    n_steps: int = g.N_STEPS
    seed: int = 0
    n_seeds: int = 1
    common_random_numbers: bool = True
    field_init: str = "analytic"
    snapshots: str = "final"
    record_trajectories: bool = False
    output_dir: str = "output"

    @property
    def seeds(self) -> list[int]:
        return list(range(self.seed, self.seed + self.n_seeds))

    def grid(self) -> GridSpec:
        return GridSpec(self.x_bound, self.n_cells, self.t_init, self.t_final, self.n_steps)

    def params(self, seed: int | None = None) -> SimParams:
        return SimParams(
            self.diffusion,
            self.theta,
            self.n_particles,
            self.seed if seed is None else seed,
            self.mode,
            self.common_random_numbers,
        )

    def snapshot_policy(self) -> SnapshotPolicy:
        grid = self.grid()
        if self.snapshots == "all":
            steps = tuple(range(grid.n_steps + 1))
        elif self.snapshots == "final":
            steps = None
        else:
            steps = tuple(int(s) for s in self.snapshots.split(","))
        return SnapshotPolicy(self.record_trajectories, steps)

    def replace(self, **changes) -> "RunConfig":
        return validate_config(dataclasses.replace(self, **changes))


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _FIELDS[key].type
    text = raw.strip()
    try:
        if kind == "Mode":
            return Mode(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError as exc:
        if kind == "Mode":
            names = ", ".join(m.value for m in Mode)
            raise ConfigError(key, f"unknown mode {text!r} (expected one of {names})") from None
        raise ConfigError(key, str(exc)) from None


def validate_config(config: RunConfig) -> RunConfig:
    """Range checks per field. Cross-field checks (e.g. particles required by
    the mode) are left to the orchestrator, which knows the mode semantics."""
    c = config
    if not 0.0 <= c.theta <= 1.0:
        raise ConfigError("theta", f"must lie in [0, 1], got {c.theta}")
    if not c.diffusion > 0:
        raise ConfigError("diffusion", f"must be positive, got {c.diffusion}")
    if c.n_particles < 0:
        raise ConfigError("n_particles", f"must be >= 0, got {c.n_particles}")
    if not c.x_bound > 0:
        raise ConfigError("x_bound", f"must be positive, got {c.x_bound}")
    if c.n_cells < 3:
        raise ConfigError("n_cells", f"must be >= 3, got {c.n_cells}")
    if c.n_steps < 1:
        raise ConfigError("n_steps", f"must be >= 1, got {c.n_steps}")
    if not c.t_init > 0:
        raise ConfigError("t_init", f"must be > 0, got {c.t_init}")
    if not c.t_final > c.t_init:
        raise ConfigError("t_final", f"must exceed t_init={c.t_init}, got {c.t_final}")
    if c.n_seeds < 1:
        raise ConfigError("n_seeds", f"must be >= 1, got {c.n_seeds}")
    if c.field_init not in FIELD_INIT_CHOICES:
        raise ConfigError("field_init", f"must be one of {', '.join(FIELD_INIT_CHOICES)}, got {c.field_init!r}")
    if c.snapshots not in ("final", "all"):
        try:
            steps = [int(s) for s in c.snapshots.split(",")]
        except ValueError:
            raise ConfigError("snapshots", f"expected 'final', 'all' or comma-separated steps, got {c.snapshots!r}") from None
        bad = [s for s in steps if not 0 <= s <= c.n_steps]
        if bad:
            raise ConfigError("snapshots", f"steps out of range 0..{c.n_steps}: {bad}")
    return c


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse config text; ``overrides`` (already typed) win over the file."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    body = text if text.lstrip().startswith("[") else f"[{SECTION}]\n{text}"
    try:
        parser.read_string(body)
    except configparser.Error as exc:
        raise ConfigError("<syntax>", str(exc).splitlines()[0]) from None
    extra = [s for s in parser.sections() if s != SECTION]
    if extra:
        raise ConfigError("<syntax>", f"unknown section(s) {extra}; use [{SECTION}] or no header")
    values = {}
    if parser.has_section(SECTION):
        for key, raw in parser.items(SECTION):
            if key not in _FIELDS:
                raise ConfigError(key, "unknown key")
            values[key] = _convert(key, raw)
    for key, value in overrides.items():
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
        if value is not None:
            values[key] = Mode(value) if key == "mode" else value
    return validate_config(RunConfig(**values))


def render_config(config: RunConfig) -> str:
    lines = [f"[{SECTION}]"]
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if isinstance(value, Mode):
            value = value.value
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
