"""Run configuration: flat key-value files, validation, presets.

Format: INI-like sections ``[physics] [grid] [forcing] [scheme] [run]``
with one ``key = value`` pair per line and ``#`` comments. Unknown keys are
errors (no silent defaults for misspellings); every diagnostic carries the
line number.

Keys and defaults
-----------------
[physics]   mu (required) | alpha (required) | beta (required)
[grid]      n (required) | l (required)
[forcing]   kind = zero | cylinder; radius, height = L/3; axis = y;
            force = 0,2,0; center = box centre; smooth_cells = 1.0
[scheme]    method = if-rk2; dt = 0.01; dt_min = 1e-8; dt_max = 0.1;
            cfl = 0.4; adaptive = true
[run]       t_end = 1.0; ic = zero; ic_amplitude = 1.0; ic_seed = 0;
            ic_energy = 1.0; ic_slope = -4.0; ic_vector = 1,0,0;
            diag_stride = 10; snapshot_stride = 0; output_dir = out;
            run_id = run
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .grid import WaveGrid
from .fields import ForcingField, SpectralVelocity, make_initial_condition
from .timestepping import Physics, SchemeConfig, SolverState

__all__ = [
    "ConfigError",
    "ForcingSpec",
    "InitialSpec",
    "RunConfig",
    "parse_config",
    "preset_names",
    "load_preset",
    "preset_text",
    "build_grid",
    "build_forcing",
    "build_initial",
    "build_physics",
    "build_state",
]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class ForcingSpec:
    kind: str = "zero"  # zero | cylinder
    radius: float | None = None
    height: float | None = None
    axis: str = "y"
    force: tuple[float, float, float] = (0.0, 2.0, 0.0)
    center: tuple[float, float, float] | None = None
    smooth_cells: float = 1.0


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "zero"  # zero | shear | random | uniform
    amplitude: float = 1.0
    seed: int = 0
    energy: float = 1.0
    slope: float = -4.0
    vector: tuple[float, float, float] = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class RunConfig:
    mu: float
    alpha: float
    beta: float
    n: int
    length: float
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    t_end: float = 1.0
    diag_stride: int = 10
    snapshot_stride: int = 0
    output_dir: str = "out"
    run_id: str = "run"

    def with_damping(self, alpha: float, beta: float) -> "RunConfig":
        return replace(self, alpha=alpha, beta=beta)


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------

def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _to_vec3(raw: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {raw!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


_SCHEMA: dict[str, dict[str, object]] = {
    "physics": {"mu": float, "alpha": float, "beta": float},
    "grid": {"n": int, "l": float},
    "forcing": {
        "kind": str, "radius": float, "height": float, "axis": str,
        "force": _to_vec3, "center": _to_vec3, "smooth_cells": float,
    },
    "scheme": {
        "method": str, "dt": float, "dt_min": float, "dt_max": float,
        "cfl": float, "adaptive": _to_bool,
    },
    "run": {
        "t_end": float, "ic": str, "ic_amplitude": float, "ic_seed": int,
        "ic_energy": float, "ic_slope": float, "ic_vector": _to_vec3,
        "diag_stride": int, "snapshot_stride": int,
        "output_dir": str, "run_id": str,
    },
}

_REQUIRED = (("physics", "mu"), ("physics", "alpha"), ("physics", "beta"),
             ("grid", "n"), ("grid", "l"))


def _parse_lines(text: str) -> dict[tuple[str, str], tuple[str, int]]:
    entries: dict[tuple[str, str], tuple[str, int]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        entries[(section, key)] = (value, lineno)
    return entries


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration. Unknown keys are errors."""
    entries = _parse_lines(text)
    for sec, key in _REQUIRED:
        if (sec, key) not in entries:
            raise ConfigError(f"missing required key {key!r} in [{sec}]")

    converted: dict[tuple[str, str], object] = {}
    for (sec, key), (raw, lineno) in entries.items():
        conv = _SCHEMA[sec][key]
        try:
            converted[(sec, key)] = conv(raw)  # type: ignore[operator]
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None

    def get(sec: str, key: str, default=None):
        return converted.get((sec, key), default)

    def fail(sec: str, key: str, message: str):
        lineno = entries[(sec, key)][1] if (sec, key) in entries else "?"
        raise ConfigError(f"line {lineno}: {message}")

    mu = get("physics", "mu")
    alpha = get("physics", "alpha")
    beta = get("physics", "beta")
    if mu <= 0:
        fail("physics", "mu", f"mu must be > 0 (kinematic viscosity), got {mu}")
    if alpha <= 0:
        fail("physics", "alpha", f"alpha must be > 0 (damping strength), got {alpha}")
    if beta < 1:
        fail("physics", "beta", f"beta must be >= 1 (damping exponent lower bound), got {beta}")

    n = get("grid", "n")
    length = get("grid", "l")
    if n < 4 or n % 2 != 0:
        fail("grid", "n", f"n must be an even integer >= 4, got {n}")
    if length <= 0:
        fail("grid", "l", f"l must be > 0, got {length}")

    kind = get("forcing", "kind", "zero").lower()
    if kind not in ("zero", "cylinder"):
        fail("forcing", "kind", f"forcing kind must be 'zero' or 'cylinder', got {kind!r}")
    axis = get("forcing", "axis", "y").lower()
    if axis not in ("x", "y", "z"):
        fail("forcing", "axis", f"axis must be x, y or z, got {axis!r}")
    smooth = get("forcing", "smooth_cells", 1.0)
    if smooth < 0:
        fail("forcing", "smooth_cells", "smooth_cells must be >= 0")
    forcing = ForcingSpec(
        kind=kind,
        radius=get("forcing", "radius"),
        height=get("forcing", "height"),
        axis=axis,
        force=get("forcing", "force", (0.0, 2.0, 0.0)),
        center=get("forcing", "center"),
        smooth_cells=smooth,
    )

    method = get("scheme", "method", "if-rk2").lower()
    try:
        scheme = SchemeConfig(
            method=method,
            dt=get("scheme", "dt", 1e-2),
            dt_min=get("scheme", "dt_min", 1e-8),
            dt_max=get("scheme", "dt_max", 0.1),
            cfl_target=get("scheme", "cfl", 0.4),
            adaptive=get("scheme", "adaptive", True),
        )
    except ValueError as exc:
        raise ConfigError(f"[scheme]: {exc}") from None

    ic_kind = get("run", "ic", "zero").lower()
    if ic_kind not in ("zero", "shear", "random", "uniform"):
        fail("run", "ic", f"ic must be zero, shear, random or uniform, got {ic_kind!r}")
    ic_energy = get("run", "ic_energy", 1.0)
    if ic_energy < 0:
        fail("run", "ic_energy", f"ic_energy must be >= 0, got {ic_energy}")
    initial = InitialSpec(
        kind=ic_kind,
        amplitude=get("run", "ic_amplitude", 1.0),
        seed=get("run", "ic_seed", 0),
        energy=ic_energy,
        slope=get("run", "ic_slope", -4.0),
        vector=get("run", "ic_vector", (1.0, 0.0, 0.0)),
    )

    t_end = get("run", "t_end", 1.0)
    if t_end < 0:
        fail("run", "t_end", f"t_end must be >= 0, got {t_end}")
    diag_stride = get("run", "diag_stride", 10)
    if diag_stride < 1:
        fail("run", "diag_stride", f"diag_stride must be >= 1, got {diag_stride}")
    snapshot_stride = get("run", "snapshot_stride", 0)
    if snapshot_stride < 0:
        fail("run", "snapshot_stride", f"snapshot_stride must be >= 0, got {snapshot_stride}")

    return RunConfig(
        mu=mu, alpha=alpha, beta=beta, n=n, length=length,
        forcing=forcing, initial=initial, scheme=scheme,
        t_end=t_end, diag_stride=diag_stride, snapshot_stride=snapshot_stride,
        output_dir=get("run", "output_dir", "out"),
        run_id=get("run", "run_id", "run"),
    )


# ----------------------------------------------------------------------
# builders
# ----------------------------------------------------------------------

def build_grid(cfg: RunConfig) -> WaveGrid:
    return WaveGrid(cfg.n, cfg.length)


def build_forcing(cfg: RunConfig, grid: WaveGrid) -> ForcingField:
    f = cfg.forcing
    if f.kind == "zero":
        return ForcingField.zero(grid)
    return ForcingField.cylinder(
        grid, center=f.center, radius=f.radius, height=f.height,
        axis=f.axis, force=f.force, smooth_cells=f.smooth_cells,
    )


def build_initial(cfg: RunConfig, grid: WaveGrid) -> SpectralVelocity:
    ic = cfg.initial
    return make_initial_condition(
        grid, ic.kind, amplitude=ic.amplitude, seed=ic.seed,
        energy=ic.energy, slope=ic.slope, vector=ic.vector,
    )


def build_physics(cfg: RunConfig, grid: WaveGrid) -> Physics:
    return Physics(mu=cfg.mu, alpha=cfg.alpha, beta=cfg.beta, forcing=build_forcing(cfg, grid))


def build_state(cfg: RunConfig, grid: WaveGrid) -> SolverState:
    return SolverState(t=0.0, u=build_initial(cfg, grid))


# ----------------------------------------------------------------------
# presets
# ----------------------------------------------------------------------

_DECAY_SHEAR = """\
# Single shear mode decaying under viscosity and linear damping.
# Exact solution: |u(t)|^2 = |u0|^2 exp(-2 (mu (2 pi/L)^2 + alpha) t).
[physics]
mu = 0.1
alpha = 0.2
beta = 1

[grid]
n = 16
l = 6.283185307179586

[scheme]
method = if-rk2
dt = 0.001
adaptive = false

[run]
t_end = 5.0
ic = shear
ic_amplitude = 1.0
diag_stride = 50
run_id = decay-shear-b1
"""

_CYLINDER_TEMPLATE = """\
# Cylinder-forced box: constant force (0,2,0) inside a centred cylinder of
# radius and height L/3 with axis along y, fluid initially at rest.
[physics]
mu = 1.0
alpha = {alpha}
beta = {beta}

[grid]
n = 32
l = 12.0

[forcing]
kind = cylinder

[scheme]
method = if-rk2
dt = 0.01
dt_max = 0.05
adaptive = true

[run]
t_end = 60.0
ic = zero
diag_stride = 10
run_id = cylinder-a{atag}-b{btag}
"""


def _cylinder_preset(alpha: float, beta: float) -> str:
    atag = f"{alpha:g}".replace("0.", "0").replace(".", "")
    btag = f"{beta:g}".replace(".", "")
    return _CYLINDER_TEMPLATE.format(alpha=alpha, beta=beta, atag=atag, btag=btag)


PRESETS: dict[str, str] = {
    "decay-shear-b1": _DECAY_SHEAR,
}
for _a in (0.2, 0.5):
    for _b in (1, 2, 4):
        _name = f"cylinder-a{f'{_a:g}'.replace('0.', '0')}-b{_b}"
        PRESETS[_name] = _cylinder_preset(_a, _b)


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_text(name: str) -> str:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None


def load_preset(name: str) -> RunConfig:
    return parse_config(preset_text(name))
