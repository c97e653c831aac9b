"""Experiment configuration files.

A configuration is UTF-8 ``key = value`` text in four sections::

    [grid]
    x_max = 30
    n_x = 301
    bc = a
    L = 1
    n_modes = 8
    dt = 0.01

    [equation]
    b = 0
    amplitude = 1e-3

    [weight]
    weight = exp:alpha=0.25

    [run]
    preset = decay_a
    T = 5

Blank lines and ``#`` comments are ignored.  :func:`parse_config` reports
every problem it finds (with line numbers) in a single
:class:`ConfigValidationError`.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .diagnostics import DiagnosticsError, decay_params
from .operators import GridSpec
from .transverse import BCCase, TransverseBasis, TransverseError
from .weights import WeightError, WeightFunction, format_weight, parse_weight

__all__ = [
    "ConfigValidationError",
    "GridSection",
    "EquationSection",
    "WeightSection",
    "RunSection",
    "ExperimentConfig",
    "PRESET_NAMES",
    "parse_config",
    "serialize_config",
    "load_config",
]

PRESET_NAMES = (
    "decay_a",
    "decay_c",
    "identity_linear",
    "conservation",
    "compat_check",
    "steklov_suite",
    "interp_suite",
    "interior_reg",
    "norm_bench",
)
DECAY_PRESETS = {"decay_a": "a", "decay_c": "c"}


class ConfigValidationError(ValueError):
    """All problems found in a configuration; ``errors`` holds ``(line, message)`` pairs."""

    def __init__(self, errors):
        self.errors = sorted(errors, key=lambda e: (e[0] == 0, e[0]))
        lines = [f"line {ln}: {msg}" if ln else msg for ln, msg in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


@dataclass
class GridSection:
    x_max: float = 30.0
    n_x: int = 301
    bc: str = "a"
    L: float = 1.0
    n_modes: int = 8
    dt: float = 0.01
    sponge_start: float | None = None
    sponge_peak: float = 10.0
    hyperdiffusion: float = 0.5


@dataclass
class EquationSection:
    b: float = 0.0
    linear_only: bool = False
    amplitude: float = 1e-3
    center: float = 3.0
    width: float = 1.0
    mode: int = 1
    # "zero" or a path to a t, y, mu CSV file
    inflow: str = "zero"


@dataclass
class WeightSection:
    weight: str = "exp:alpha=0.25"
    x0: float | None = None


@dataclass
class RunSection:
    preset: str = "custom"
    T: float = 5.0
    snapshot_every: int = 50
    seed: int = 0
    cfl: float = 0.5


SECTIONS = {
    "grid": GridSection,
    "equation": EquationSection,
    "weight": WeightSection,
    "run": RunSection,
}


@dataclass
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    equation: EquationSection = field(default_factory=EquationSection)
    weight: WeightSection = field(default_factory=WeightSection)
    run: RunSection = field(default_factory=RunSection)

    @property
    def weight_function(self) -> WeightFunction:
        return parse_weight(self.weight.weight)

    @property
    def admissible(self) -> bool | None:
        """Decay admissibility (alpha <= alpha0, L < L0); ``None`` outside cases a, c."""
        try:
            w = self.weight_function
            return decay_params(self.grid.bc, self.grid.L, self.equation.b, w.alpha).admissible
        except (DiagnosticsError, WeightError, TransverseError):
            return None

    def basis(self) -> TransverseBasis:
        return TransverseBasis(self.grid.bc, self.grid.L, self.grid.n_modes)

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(
            g.x_max, g.n_x, self.basis(), g.dt, g.sponge_start, g.sponge_peak, g.hyperdiffusion
        )

    def replace(self, **sections) -> "ExperimentConfig":
        """Copy with per-section overrides, e.g. ``replace(grid={"n_x": 601})``."""
        parts = {}
        for name in SECTIONS:
            cur = getattr(self, name)
            parts[name] = dataclasses.replace(cur, **sections.get(name, {}))
        return ExperimentConfig(**parts)


def _field_types(cls):
    return {f.name: f.type for f in dataclasses.fields(cls)}


def _convert(raw: str, typ: str):
    optional = "None" in typ
    if optional and raw.lower() in ("none", ""):
        return None
    base = typ.split("|")[0].strip()
    if base == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if base == "int":
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"expected an integer, got {raw!r}") from None
    if base == "float":
        try:
            v = float(raw)
        except ValueError:
            raise ValueError(f"expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return v
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; raises :class:`ConfigValidationError`."""
    errors = []
    values = {name: {} for name in SECTIONS}
    lines_of = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            name = s[1:-1].strip()
            if name not in SECTIONS:
                errors.append((lineno, f"unknown section [{name}]; expected one of {', '.join(SECTIONS)}"))
                section = "__bad__"
            else:
                section = name
            continue
        if "=" not in s:
            errors.append((lineno, f"expected 'key = value', got {s!r}"))
            continue
        key, _, raw = (p.strip() for p in s.partition("="))
        if section is None:
            errors.append((lineno, f"key {key!r} appears before any section header"))
            continue
        if section == "__bad__":
            continue
        types = _field_types(SECTIONS[section])
        if key not in types:
            errors.append((lineno, f"unknown key {key!r} in [{section}]; known keys: {', '.join(types)}"))
            continue
        if key in values[section]:
            errors.append((lineno, f"duplicate key {key!r} in [{section}]"))
            continue
        try:
            values[section][key] = _convert(raw, types[key])
        except ValueError as e:
            errors.append((lineno, f"{section}.{key}: {e}"))
            continue
        lines_of[(section, key)] = lineno
    cfg = ExperimentConfig(**{n: SECTIONS[n](**values[n]) for n in SECTIONS})
    errors += _validate(cfg, lines_of)
    if errors:
        raise ConfigValidationError(errors)
    cfg.weight.weight = format_weight(parse_weight(cfg.weight.weight))
    return cfg


def _validate(cfg: ExperimentConfig, lines_of: dict) -> list:
    errs = []

    def err(section, key, msg):
        errs.append((lines_of.get((section, key), 0), msg))

    g, eq, w, r = cfg.grid, cfg.equation, cfg.weight, cfg.run
    case = None
    try:
        case = BCCase.parse(g.bc)
    except TransverseError as e:
        err("grid", "bc", str(e))
    for key in ("x_max", "L", "dt"):
        if not getattr(g, key) > 0:
            err("grid", key, f"grid.{key} must be positive")
    if g.n_x < 8:
        err("grid", "n_x", "grid.n_x must be at least 8")
    if g.n_modes < 1:
        err("grid", "n_modes", "grid.n_modes must be at least 1")
    elif case is BCCase.PERIODIC and g.n_modes % 2 == 0:
        err("grid", "n_modes", "case d needs an odd number of modes")
    if g.sponge_start is not None and not 0 < g.sponge_start < g.x_max:
        err("grid", "sponge_start", "grid.sponge_start must lie inside (0, x_max)")
    if g.sponge_peak < 0:
        err("grid", "sponge_peak", "grid.sponge_peak must be non-negative")
    if g.hyperdiffusion < 0:
        err("grid", "hyperdiffusion", "grid.hyperdiffusion must be non-negative")
    if eq.width <= 0:
        err("equation", "width", "equation.width must be positive")
    if eq.mode < 1:
        err("equation", "mode", "equation.mode must be at least 1")
    weight = None
    try:
        weight = parse_weight(w.weight)
        if weight.family != "const" and not weight.alpha > 0:
            err("weight", "weight", "weight rate alpha must be positive")
            weight = None
    except WeightError as e:
        err("weight", "weight", str(e))
    if w.x0 is not None and not 0 < w.x0 < g.x_max:
        err("weight", "x0", "weight.x0 must lie inside (0, x_max)")
    if r.preset != "custom" and r.preset not in PRESET_NAMES:
        err("run", "preset", f"unknown preset {r.preset!r}; expected custom or one of {', '.join(PRESET_NAMES)}")
    if r.T < 0:
        err("run", "T", "run.T must be non-negative")
    elif g.dt > 0 and abs(round(r.T / g.dt) * g.dt - r.T) > 1e-9 * max(1.0, r.T):
        err("run", "T", f"run.T = {r.T} is not a multiple of grid.dt = {g.dt}")
    if r.snapshot_every < 1:
        err("run", "snapshot_every", "run.snapshot_every must be at least 1")
    if r.cfl <= 0:
        err("run", "cfl", "run.cfl must be positive")
    if r.preset in DECAY_PRESETS and case is not None and weight is not None:
        want = DECAY_PRESETS[r.preset]
        if case.value != want:
            err("grid", "bc", f"preset {r.preset} runs case {want}, config has bc = {case.value}")
        elif weight.family != "exp":
            err("weight", "weight", f"preset {r.preset} needs an exponential weight")
        elif g.L > 0:
            p = decay_params(case, g.L, eq.b, weight.alpha)
            if weight.alpha > p.alpha0:
                err("weight", "weight", f"α exceeds α₀ ≈ {p.alpha0:.5f} (alpha = {weight.alpha:g}, L = {g.L:g})")
            if not g.L < p.L0:
                err("grid", "L", f"L = {g.L:g} is not below L₀ ≈ {p.L0:.5f} for b = {eq.b:g}")
    return errs


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Text that :func:`parse_config` maps back to an equal configuration."""
    out = []
    for name in SECTIONS:
        out.append(f"[{name}]")
        sec = getattr(cfg, name)
        for f in dataclasses.fields(sec):
            val = getattr(sec, f.name)
            out.append(f"{f.name} = {_format_value(val)}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
