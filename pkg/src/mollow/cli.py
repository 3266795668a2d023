"""Command-line entry point: ``mollow <command> [--config FILE] [--recipe NAME] ...``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
4 fit did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .budget import photon_budget
from .config import ConfigError, RunConfig, load, parse_bounds, recipe_names, recipe_text
from .detection import (
    SpectrumSeries,
    beat_map,
    dressed_frequencies,
    transmission_spectrum,
)
from .dynamics import IntegrationError, IntegratorConfig, folded_trace, integrate, max_frequency
from .fit import FitError, FitProblem, ModelParams, fit, forward_model, synthetic_data
from .floquet import FloquetError
from .model import BlochState

log = logging.getLogger("mollow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOCONV = 0, 2, 3, 4


class InputError(ValueError):
    pass


# --------------------------------------------------------------------- output


def _fmt(v, precision):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{precision}g}"


def write_csv(path: Path, header, rows, cfg: RunConfig, command: str) -> Path:
    buf = io.StringIO()
    buf.write(f"# mollow {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True, default=_json_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    p = cfg.output.precision
    for row in rows:
        w.writerow([_fmt(v, p) for v in row])
    path.write_text(buf.getvalue())
    log.info("wrote %s", path)
    return path


def _json_default(o):
    if isinstance(o, tuple):
        return list(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.output.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _svg_wanted(cfg):
    return "svg" in cfg.output.formats


# --------------------------------------------------------------------- sweeps


def _chunks(grid, jobs):
    n = max(1, min(jobs, len(grid)))
    return [c for c in np.array_split(grid, n) if c.size]


def _sweep(fn, grid, jobs):
    """Apply ``fn`` to contiguous chunks of ``grid``; results in grid order."""
    chunks = _chunks(grid, jobs)
    if len(chunks) == 1:
        return [fn(chunks[0])]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(fn, chunks))


def _transmission_chunk(e, d, det, n_max, grid):
    return transmission_spectrum(e, d, grid, det, n_max).y


def _spectrum(cfg: RunConfig, d, grid, jobs):
    fn = partial(_transmission_chunk, cfg.emitter, d, cfg.detection, cfg.solver.n_max)
    return np.concatenate(_sweep(fn, grid, jobs))


def _beat_chunk(e, det, d, n_max, k_max, grid):
    return beat_map(e, det, d, grid, n_max, k_max).magnitude


# ------------------------------------------------------------------- commands


def cmd_spectrum(cfg: RunConfig, args) -> int:
    grid = cfg.sweep.grid()
    t = _spectrum(cfg, cfg.drive, grid, args.jobs)
    out = _outdir(cfg)
    write_csv(out / "spectrum.csv", ["delta_mhz", "transmission"], zip(grid, t), cfg, "spectrum")
    contrast = None
    if cfg.section("spectrum").get("contrast", False):
        t_off = _spectrum(cfg, cfg.drive.with_(omega_pump=0.0), grid, args.jobs)
        contrast = _contrast_db(t, t_off)
        write_csv(
            out / "contrast.csv",
            ["delta_mhz", "t_off", "t_on", "contrast_db"],
            zip(grid, t_off, t, contrast),
            cfg,
            "spectrum",
        )
        print(f"peak switching contrast {np.max(contrast):.3f} dB at delta = {grid[np.argmax(contrast)]:.4g} MHz")
    if _svg_wanted(cfg):
        from .plotting import spectrum_svg

        m = dressed_frequencies(cfg.emitter, cfg.drive)
        spectrum_svg(out / "spectrum.svg", grid, t, markers=m.as_list() + [m.bare_resonance], extra=contrast)
    return EXIT_OK


def _contrast_db(t_on, t_off):
    with np.errstate(divide="ignore"):
        c = 10 * np.log10(t_on) - 10 * np.log10(t_off)
    c[t_off == 0] = np.inf
    return c


def cmd_switch(cfg: RunConfig, args) -> int:
    grid = cfg.sweep.grid()
    t_on = _spectrum(cfg, cfg.drive, grid, args.jobs)
    t_off = _spectrum(cfg, cfg.drive.with_(omega_pump=0.0), grid, args.jobs)
    c = _contrast_db(t_on, t_off)
    out = _outdir(cfg)
    write_csv(out / "switch.csv", ["delta_mhz", "t_off", "t_on", "contrast_db"], zip(grid, t_off, t_on, c), cfg, "switch")
    i = int(np.argmax(c))
    print(f"peak switching contrast {c[i]:.3f} dB at delta = {grid[i]:.4g} MHz")
    if _svg_wanted(cfg):
        from .plotting import spectrum_svg

        spectrum_svg(out / "switch.svg", grid, t_on, markers=[-cfg.drive.delta_pump, 0.0], extra=c)
    return EXIT_OK


def cmd_timetrace(cfg: RunConfig, args) -> int:
    e, d = cfg.emitter, cfg.drive
    sec = cfg.section("timetrace")
    b = sec.get("background", 0.0)
    initial = BlochState(0j, sec.get("initial_population", 0.0))
    folded = sec.get("folded", True) and d.delta_pp != 0
    s = cfg.solver
    if d.delta_pp != 0:
        icfg = IntegratorConfig.for_drive(
            e, d, periods=s.periods, transient_periods=s.transient_periods, steps_per_cycle=s.steps_per_cycle
        )
        if s.dt is not None:
            icfg = replace(icfg, dt=s.dt)
    else:
        dt = s.dt if s.dt is not None else 1e3 / (s.steps_per_cycle * max_frequency(e, d))
        t_end = sec.get("t_end") or 10.0 / e.gamma * 1e3 / (2 * math.pi)
        icfg = IntegratorConfig(dt, t_end, 0)
    if sec.get("t_end") is not None and d.delta_pp != 0:
        icfg = replace(icfg, t_end=sec["t_end"])
    tr = integrate(e, d, icfg, initial)
    if folded:
        tr = folded_trace(tr, d, icfg)
        phase = tr.phase
    else:
        phase = (abs(d.delta_pp) * tr.times * 1e-3) % 1.0
    fl = cfg.detection.fluor_scale * tr.fluorescence + b * tr.rabi_envelope**2
    out = _outdir(cfg)
    write_csv(
        out / "timetrace.csv",
        ["time_ns", "phase", "fluorescence", "rabi_mhz"],
        zip(tr.times, phase, fl, tr.rabi_envelope),
        cfg,
        "timetrace",
    )
    if _svg_wanted(cfg):
        from .plotting import trace_svg

        trace_svg(out / "timetrace.svg", phase if folded else tr.times, fl, tr.rabi_envelope)
    return EXIT_OK


def cmd_beatmap(cfg: RunConfig, args) -> int:
    grid = cfg.sweep.grid()
    k_max = cfg.section("beatmap").get("k_max", 3)
    fn = partial(_beat_chunk, cfg.emitter, cfg.detection, cfg.drive, cfg.solver.n_max, k_max)
    mag = np.concatenate(_sweep(fn, grid, args.jobs), axis=0)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag)
    rows = ((x, k + 1, db[i, k]) for i, x in enumerate(grid) for k in range(k_max))
    out = _outdir(cfg)
    write_csv(out / "beatmap.csv", ["delta_mhz", "k", "magnitude_db"], rows, cfg, "beatmap")
    if _svg_wanted(cfg):
        from .plotting import beatmap_svg

        beatmap_svg(out / "beatmap.svg", grid, np.arange(1, k_max + 1), np.maximum(db, -300))
    return EXIT_OK


BUDGET_HEADER = [
    "deficit",
    "S",
    "delta_mhz",
    "sigma_ratio",
    "coupling_ratio",
    "n_inc_per_invgamma",
    "n_inc_per_tau",
    "n_sca_per_invgamma",
]


def cmd_budget(cfg: RunConfig, args) -> int:
    sec = cfg.section("budget")
    S = sec.get("saturation", 2.0)
    delta = sec.get("delta", cfg.drive.delta_pump)
    lo, hi = sec.get("deficit_min", 1.0), sec.get("deficit_max", 1.0)
    steps = sec.get("deficit_steps", 2) if hi > lo else 1
    rows = []
    for k in np.linspace(lo, hi, steps):
        r = photon_budget(S, delta, cfg.emitter.gamma, float(k))
        rows.append([k, r.S, delta, r.sigma_ratio, r.coupling_ratio, r.n_inc_per_invgamma, r.n_inc_per_tau, r.n_sca_per_invgamma])
    p = cfg.output.precision
    widths = [max(len(h), 12) for h in BUDGET_HEADER]
    print("  ".join(h.rjust(w) for h, w in zip(BUDGET_HEADER, widths)))
    for row in rows:
        print("  ".join(_fmt(v, min(p, 6)).rjust(w) for v, w in zip(row, widths)))
    write_csv(_outdir(cfg) / "budget.csv", BUDGET_HEADER, rows, cfg, "budget")
    return EXIT_OK


def read_spectrum_csv(path) -> SpectrumSeries:
    """Read ``delta_mhz,transmission`` rows; ``#`` lines are comments."""
    xs, ys = [], []
    header_seen = False
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(str(exc)) from None
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        cells = [c.strip() for c in s.split(",")]
        if not header_seen:
            header_seen = True
            if cells[:2] == ["delta_mhz", "transmission"]:
                continue
        if len(cells) < 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
        try:
            x, y = float(cells[0]), float(cells[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric value in {s!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        xs.append(x)
        ys.append(y)
    if len(xs) < 2:
        raise InputError(f"{path}: fewer than two data rows")
    order = np.argsort(xs, kind="stable")
    x = np.asarray(xs)[order]
    if np.any(np.diff(x) == 0):
        raise InputError(f"{path}: duplicate delta values")
    return SpectrumSeries(x, np.asarray(ys)[order], "transmission", {"source": str(path)})


def _model_params(cfg: RunConfig) -> ModelParams:
    sec = cfg.section("fit")
    return ModelParams(
        gamma=cfg.emitter.gamma,
        delta_pump=cfg.drive.delta_pump,
        omega_pump=cfg.drive.omega_pump,
        omega_probe=cfg.drive.omega_probe,
        psi=cfg.detection.psi,
        eps_pump=cfg.detection.eps_pump,
        baseline_offset=sec.get("baseline_offset", 1.0),
        baseline_slope=sec.get("baseline_slope", 0.0),
        delta_axis_shift=sec.get("delta_axis_shift", 0.0),
    )


def cmd_fit(cfg: RunConfig, args) -> int:
    if not args.data:
        raise InputError("fit needs a data file")
    data = read_spectrum_csv(args.data)
    sec = cfg.section("fit")
    bounds = parse_bounds(sec.get("bounds", ""))
    try:
        problem = FitProblem(data, tuple(sec.get("free", ())), _model_params(cfg), bounds, cfg.solver.n_max)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = fit(problem)
    out = _outdir(cfg)
    model = forward_model(res.estimates, data.x, cfg.solver.n_max).y
    write_csv(
        out / "fit_curve.csv",
        ["delta_mhz", "measured", "model", "residual"],
        zip(data.x, data.y, model, model - data.y),
        cfg,
        "fit",
    )
    report = format_report(res)
    (out / "fit_report.txt").write_text(report)
    print(report, end="")
    return EXIT_OK if res.converged else EXIT_NOCONV


def format_report(res) -> str:
    err = res.stderr()
    lines = [
        f"mollow {__version__} fit report",
        f"converged: {str(res.converged).lower()} ({res.message})",
        f"iterations: {res.iterations}",
        f"cost: {res.cost:.9g}",
        f"points: {res.per_point_residuals.size}",
        "parameters:",
    ]
    for name, value in asdict(res.estimates).items():
        if name in err:
            lines.append(f"  {name} = {value:.9g} +/- {err[name]:.3g}")
        else:
            lines.append(f"  {name} = {value:.9g} (fixed)")
    return "\n".join(lines) + "\n"


def cmd_synth(cfg: RunConfig, args) -> int:
    grid = cfg.sweep.grid()
    noise = cfg.section("synth").get("noise", 0.0)
    data = synthetic_data(_model_params(cfg), grid, noise=noise, seed=args.seed, n_max=cfg.solver.n_max)
    path = _outdir(cfg) / "synthetic.csv"
    write_csv(path, ["delta_mhz", "transmission"], zip(data.x, data.y), cfg, f"synth seed={args.seed}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "switch": cmd_switch,
    "timetrace": cmd_timetrace,
    "beatmap": cmd_beatmap,
    "budget": cmd_budget,
    "fit": cmd_fit,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mollow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mollow {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["reproduce"]:
        p = sub.add_parser(name)
        if name == "fit":
            p.add_argument("data", nargs="?", help="measured spectrum CSV (delta_mhz,transmission)")
        if name == "reproduce":
            p.add_argument("recipe", help="recipe name; one of: " + ", ".join(recipe_names()))
        else:
            p.add_argument("--recipe", help="start from a bundled recipe")
        p.add_argument("--config", "-c", help="INI configuration file")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config value")
        p.add_argument("--out", "-o", help="output directory (overrides output.directory)")
        p.add_argument("--svg", action="store_true", help="also write SVG figures")
        p.add_argument("--n-max", type=int, help="harmonic truncation order")
        p.add_argument("--jobs", "-j", type=int, default=os.cpu_count() or 1, help="worker processes for sweeps")
        p.add_argument("--seed", type=int, default=0, help="seed for synthetic data")
    sub.add_parser("recipes", help="list bundled recipes")
    return ap


def _setup_logging():
    level = os.environ.get("MOLLOW_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "recipes":
        for name in recipe_names():
            first = [ln for ln in recipe_text(name).splitlines() if ln.startswith("description")]
            print(f"{name:10s} {first[0].split('=', 1)[1].strip() if first else ''}")
        return EXIT_OK
    recipe = args.recipe
    try:
        overrides = list(args.set)
        if args.out:
            overrides.append(f"output.directory={args.out}")
        if args.svg:
            overrides.append("output.formats=csv svg")
        if args.n_max is not None:
            overrides.append(f"solver.n_max={args.n_max}")
        cfg = load(args.config, overrides, recipe=recipe)
        command = args.command
        if command == "reproduce":
            command = cfg.section("recipe").get("command")
            if command not in COMMANDS:
                raise ConfigError(f"recipe {recipe!r} names no runnable command")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if command != "fit":
            args.data = None
        return COMMANDS[command](cfg, args)
    except (ConfigError, InputError) as exc:
        print(f"mollow: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloquetError, IntegrationError, FitError, np.linalg.LinAlgError) as exc:
        print(f"mollow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"mollow: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
