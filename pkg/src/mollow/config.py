"""Run configuration: INI files with one section per parameter group.

Every key is listed in :data:`SCHEMA`; anything else is rejected.  Values given
on the command line with ``--set section.key=value`` override the file.

Example::

    [emitter]
    gamma = 20

    [drive]
    omega_pump = 30
    omega_probe = 5
    delta_pump = 10

    [sweep]
    delta_min = -100
    delta_max = 100
    steps = 2001
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .detection import DetectionParams, psi_from_dip
from .fit import PARAM_NAMES
from .model import DriveConfig, EmitterParams


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _opt_int(s: str):
    return None if s.strip().lower() in ("", "none") else int(s)


def _words(s: str) -> tuple[str, ...]:
    return tuple(w for w in s.replace(",", " ").split() if w)


SCHEMA = {
    "recipe": {"command": str, "description": str},
    "emitter": {"gamma": float, "nu_mol_offset": float, "branching": float, "wavelength": _opt_float},
    "drive": {"omega_pump": float, "omega_probe": float, "delta_pump": float, "delta_pp": float},
    "sweep": {"delta_min": float, "delta_max": float, "steps": int, "skip_zero": _bool},
    "detection": {"psi": float, "dip_depth": _opt_float, "eps_pump": float, "fluor_scale": float},
    "solver": {
        "n_max": int,
        "dt": _opt_float,
        "periods": int,
        "transient_periods": _opt_int,
        "steps_per_cycle": int,
    },
    "output": {"directory": str, "formats": _words, "precision": int},
    "spectrum": {"contrast": _bool},
    "timetrace": {"background": float, "folded": _bool, "initial_population": float, "t_end": _opt_float},
    "beatmap": {"k_max": int},
    "budget": {
        "saturation": float,
        "delta": float,
        "deficit_min": float,
        "deficit_max": float,
        "deficit_steps": int,
    },
    "fit": {
        "free": _words,
        "baseline_offset": float,
        "baseline_slope": float,
        "delta_axis_shift": float,
        "bounds": str,
    },
    "synth": {"noise": float},
}


@dataclass(frozen=True)
class SweepConfig:
    delta_min: float = -100.0
    delta_max: float = 100.0
    steps: int = 401
    skip_zero: bool = True

    def grid(self) -> np.ndarray:
        g = np.linspace(self.delta_min, self.delta_max, self.steps)
        if self.skip_zero:
            g = g[g != 0]
        return g


@dataclass(frozen=True)
class SolverConfig:
    n_max: int = 10
    dt: float | None = None
    periods: int = 3
    transient_periods: int | None = None
    steps_per_cycle: int = 200


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    formats: tuple[str, ...] = ("csv",)
    precision: int = 9


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterParams = field(default_factory=EmitterParams)
    drive: DriveConfig = field(default_factory=DriveConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    detection: DetectionParams = field(default_factory=DetectionParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    extra: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.extra.get(name, {})

    def to_dict(self) -> dict:
        d = {
            "emitter": asdict(self.emitter),
            "drive": asdict(self.drive),
            "sweep": asdict(self.sweep),
            "detection": asdict(self.detection),
            "solver": asdict(self.solver),
            "output": asdict(self.output),
        }
        d.update({k: dict(v) for k, v in sorted(self.extra.items())})
        return d


def _parse_sections(parser: configparser.ConfigParser) -> dict:
    out = {}
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        keys = SCHEMA[sec]
        out[sec] = {}
        for key, raw in parser.items(sec):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            try:
                out[sec][key] = keys[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key} = {raw!r}: {exc}") from None
    return out


def _reader() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    p.optionxform = str  # keys are case sensitive
    return p


def recipe_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("mollow.recipes").iterdir() if p.name.endswith(".ini"))


def recipe_text(name: str) -> str:
    path = resources.files("mollow.recipes") / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"unknown recipe {name!r}; available: {', '.join(recipe_names())}")
    return path.read_text()


def load(path: str | Path | None = None, overrides=(), recipe: str | None = None) -> RunConfig:
    """Read a recipe and/or a config file, apply ``section.key=value`` overrides."""
    parser = _reader()
    try:
        if recipe is not None:
            parser.read_string(recipe_text(recipe), source=f"recipe:{recipe}")
        if path is not None:
            text = Path(path).read_text()
            parser.read_string(text, source=str(path))
    except (configparser.Error, OSError) as exc:
        raise ConfigError(str(exc)) from None
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        if not parser.has_section(sec):
            parser.add_section(sec)
        parser.set(sec, key.strip(), value.strip())
    return build(_parse_sections(parser))


def build(values: dict) -> RunConfig:
    try:
        emitter = EmitterParams(**values.get("emitter", {}))
        drive_vals = dict(values.get("drive", {}))
        if "delta_pump" not in drive_vals and "nu_mol_offset" in values.get("emitter", {}):
            drive_vals["delta_pump"] = emitter.pump_detuning
        drive = DriveConfig(**drive_vals)
        sweep = SweepConfig(**values.get("sweep", {}))
        if sweep.steps < 2:
            raise ConfigError("sweep steps must be >= 2")
        if not sweep.delta_max > sweep.delta_min:
            raise ConfigError("sweep delta_max must exceed delta_min")
        det_vals = dict(values.get("detection", {}))
        depth = det_vals.pop("dip_depth", None)
        if depth is not None:
            if "psi" in det_vals:
                raise ConfigError("give either detection.psi or detection.dip_depth, not both")
            det_vals["psi"] = psi_from_dip(depth)
        detection = DetectionParams(**det_vals)
        solver = SolverConfig(**values.get("solver", {}))
        if solver.n_max < 2:
            raise ConfigError("solver n_max must be >= 2")
        output = OutputConfig(**values.get("output", {}))
        bad = set(output.formats) - {"csv", "svg"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        if not 1 <= output.precision <= 17:
            raise ConfigError("output precision must lie in 1..17")
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    extra = {k: v for k, v in values.items() if k not in ("emitter", "drive", "sweep", "detection", "solver", "output")}
    free = extra.get("fit", {}).get("free", ())
    unknown = set(free) - set(PARAM_NAMES)
    if unknown:
        raise ConfigError(f"unknown fit parameters {sorted(unknown)}")
    budget = extra.get("budget", {})
    if budget.get("deficit_steps", 2) < 2:
        raise ConfigError("budget deficit_steps must be >= 2")
    return RunConfig(emitter, drive, sweep, detection, solver, output, extra)


def parse_bounds(text: str) -> dict:
    """``"gamma:5:50, psi:0:1"`` -> ``{"gamma": (5.0, 50.0), "psi": (0.0, 1.0)}``."""
    out = {}
    for item in _words(text):
        try:
            name, lo, hi = item.split(":")
            out[name] = (float(lo), float(hi))
        except ValueError:
            raise ConfigError(f"bad bound {item!r}; expected name:lo:hi") from None
        if name not in PARAM_NAMES:
            raise ConfigError(f"bound for unknown parameter {name!r}")
        if not out[name][0] <= out[name][1] or any(math.isnan(v) for v in out[name]):
            raise ConfigError(f"empty bound interval for {name}")
    return out
