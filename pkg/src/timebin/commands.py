"""The four run modes behind the command line: simulate, design, franson, sweep."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import tomli_w

from .config import (
    ConfigError,
    RunConfig,
    grid_section,
    params_section,
    parse_config,
    train_from_sections,
    train_sections,
    with_override,
)
from .designer import DesignNotConverged, design
from .dynamics import (
    GridSpec,
    bin_areas,
    closed_form_antistokes,
    closed_form_stokes,
    integrate,
)
from .export import (
    read_trace_csv,
    table_text,
    atomic_write,
    write_fringe_csv,
    write_json,
    write_plot_script,
    write_trace_csv,
)
from .franson import (
    FransonResult,
    analytic_averaged_counts,
    averaged_counts,
    ideal_state,
    state_from_trace,
)
from .pulse_model import integrated_gain, pulse_exposure

log = logging.getLogger(__name__)


def _grid(cfg: RunConfig, fixed_step: float | None) -> GridSpec:
    if fixed_step is None:
        return cfg.grid
    if not fixed_step > 0:
        raise ConfigError("--fixed-step", "must be > 0")
    return dataclasses.replace(cfg.grid, fixed_step=fixed_step)


def run_simulation(cfg: RunConfig, fixed_step: float | None = None):
    if cfg.design is not None:
        raise ConfigError("design", "simulate needs an explicit train, not a design target")
    if cfg.train is None:
        raise ConfigError("write", "simulate needs a [write] section")
    grid = _grid(cfg, fixed_step)
    trace = integrate(cfg.params, cfg.train, grid)
    bins = bin_areas(trace, cfg.train)
    return trace, bins, grid


def simulation_summary(cfg: RunConfig, trace, bins, grid: GridSpec) -> dict:
    train = cfg.train
    t_end = float(trace.grid[-1])
    stored = trace.n_sp_at(bins.windows[0][0]) if bins.windows else float(trace.n_sp[-1])
    ns_cf = float(closed_form_stokes(cfg.params, train, t_end)) + grid.initial_n_sp
    return {
        "command": "simulate",
        "params": params_section(cfg.params, train.separation_factor),
        "train": train_sections(train),
        "grid": grid_section(grid),
        "integrator": "rk4" if grid.fixed_step else "DOP853",
        "n_s_total": trace.n_s_total,
        "n_as_total": trace.n_as_total,
        "n_sp_final": float(trace.n_sp[-1]),
        "stored_excitation": stored,
        "integrated_gain": integrated_gain(cfg.params, train.write),
        "read_exposures": [pulse_exposure(cfg.params, r) for r in train.reads],
        "relaxation_free": {
            "n_s": ns_cf - grid.initial_n_sp,
            "n_as": float(closed_form_antistokes(cfg.params, train, t_end, ns_cf)),
        },
        "bins": {
            "windows": [list(w) for w in bins.windows],
            "areas": list(bins.areas),
            "total": bins.total,
            "fractions": list(bins.fractions),
        },
    }


def cmd_simulate(cfg: RunConfig, out_dir: Path | None = None, fixed_step: float | None = None) -> dict:
    trace, bins, grid = run_simulation(cfg, fixed_step)
    summary = simulation_summary(cfg, trace, bins, grid)
    out = Path(out_dir or cfg.output.dir)
    if cfg.output.csv:
        write_trace_csv(out / "trace.csv", trace)
    if cfg.output.json:
        write_json(out / "summary.json", summary)
    if cfg.output.plot_script:
        write_plot_script(out / "plot_trace.py", "trace")
    log.info("n_S=%.6g n_AS=%.6g bins=%s", trace.n_s_total, trace.n_as_total, bins.areas)
    return summary


def designed_config(cfg: RunConfig, peaks, grid: GridSpec) -> dict:
    train = cfg.train.with_read_peaks(peaks)
    doc = {"params": params_section(cfg.params, train.separation_factor)}
    doc.update(train_sections(train))
    doc["grid"] = grid_section(grid)
    return doc


def cmd_design(cfg: RunConfig, out_dir: Path | None = None, fixed_step: float | None = None) -> dict:
    if cfg.design is None:
        raise ConfigError("design", "missing [design] section")
    out = Path(out_dir or cfg.output.dir)
    grid = _grid(cfg, fixed_step)
    dc = cfg.design
    report = {
        "command": "design",
        "target": {
            "weights": list(dc.target.weights),
            "total_retrieval": dc.target.total_retrieval,
            "refine": dc.target.refine,
            "rel_tol": dc.rel_tol,
            "max_iter": dc.max_iter,
        },
    }
    try:
        result = design(cfg.params, cfg.train, dc.target, grid_spec=grid,
                        rel_tol=dc.rel_tol, max_iter=dc.max_iter)
    except DesignNotConverged as exc:
        report.update(exc.result.to_dict())
        write_json(out / "design.json", report)
        raise
    report.update(result.to_dict())
    write_json(out / "design.json", report)
    atomic_write(out / "designed_train.toml", tomli_w.dumps(designed_config(cfg, result.peaks, grid)))
    return report


def _franson_state(cfg: RunConfig):
    fc = cfg.franson
    if fc.source == "ideal":
        weights = fc.weights if fc.weights is not None else fc.bins
        return ideal_state(weights, fc.spacing, fc.mode_width, fc.phases)
    if fc.trace_dir is None or not (fc.trace_dir / "summary.json").exists():
        raise ConfigError("franson.trace_dir", f"no simulate output found in {fc.trace_dir}")
    summary = json.loads((fc.trace_dir / "summary.json").read_text(encoding="utf-8"))
    sep = summary["params"].get("separation_factor", 6.0)
    train = train_from_sections(summary["train"], sep)
    trace = read_trace_csv(fc.trace_dir / "trace.csv")
    bins = bin_areas(trace, train)
    return state_from_trace(bins, train, fc.phases, trace=trace)


def _analytic_amplitude(state, variance: float) -> float | None:
    try:
        n1, _ = analytic_averaged_counts(state, np.array([0.0]), variance)
    except ValueError:
        return None
    return float(2 * n1[0] - 1)


def run_franson(cfg: RunConfig, seed: int | None = None) -> tuple[object, list[FransonResult]]:
    if cfg.franson is None:
        raise ConfigError("franson", "missing [franson] section (state source)")
    fc = cfg.franson
    if seed is not None:
        fc = dataclasses.replace(fc, seed=seed)
    state = _franson_state(dataclasses.replace(cfg, franson=fc))
    theta = np.linspace(fc.theta_min, fc.theta_max, fc.theta_points)
    results = [
        averaged_counts(state, theta, fc.noise_model(v), workers=fc.workers) for v in fc.variances
    ]
    return state, results


def cmd_franson(cfg: RunConfig, out_dir: Path | None = None, seed: int | None = None) -> dict:
    state, results = run_franson(cfg, seed)
    out = Path(out_dir or cfg.output.dir)
    rows = []
    O = state.overlap_matrix() if state.J > 1 else np.zeros((1, 1))
    for i, res in enumerate(results):
        entry = res.summary()
        entry["analytic_amplitude"] = _analytic_amplitude(state, res.noise.variance)
        entry["csv"] = f"fringe_{i}.csv"
        rows.append(entry)
        if cfg.output.csv:
            write_fringe_csv(out / entry["csv"], res)
    summary = {
        "command": "franson",
        "state": {
            "J": state.J,
            "populations": state.populations.tolist(),
            "phases_rad": np.angle(np.array(state.amplitudes)).tolist(),
            "tau_inv_gamma": state.tau,
            "adjacent_overlaps": [float(O[k + 1, k]) for k in range(state.J - 1)],
        },
        "results": rows,
    }
    if cfg.output.json:
        write_json(out / "franson.json", summary)
    if cfg.output.plot_script:
        write_plot_script(out / "plot_fringes.py", "fringes")
    return summary


def _sweep_point(raw: dict, key: str, value, base_dir: str, fixed_step):
    point = with_override(raw, key, value)
    point.pop("sweep", None)
    point.pop("franson", None)
    cfg = parse_config(point, base_dir)
    trace, bins, grid = run_simulation(cfg, fixed_step)
    return {
        "value": value,
        "n_s_total": trace.n_s_total,
        "n_as_total": trace.n_as_total,
        "n_sp_final": float(trace.n_sp[-1]),
        "bin_areas": list(bins.areas),
    }


def cmd_sweep(cfg: RunConfig, out_dir: Path | None = None, fixed_step: float | None = None) -> dict:
    if cfg.sweep is None:
        raise ConfigError("sweep", "missing [sweep] section")
    sw = cfg.sweep
    args = [(cfg.raw, sw.key, v, str(cfg.base_dir), fixed_step) for v in sw.values]
    if sw.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=sw.workers) as pool:
            rows = list(pool.map(_sweep_point, *zip(*args)))
    else:
        rows = [_sweep_point(*a) for a in args]
    out = Path(out_dir or cfg.output.dir)
    J = max((len(r["bin_areas"]) for r in rows), default=0)
    header = [sw.key, "n_s_total", "n_as_total", "n_sp_final"] + [f"bin_{j + 1}" for j in range(J)]
    table = [
        [r["value"], r["n_s_total"], r["n_as_total"], r["n_sp_final"]]
        + r["bin_areas"] + [math.nan] * (J - len(r["bin_areas"]))
        for r in rows
    ]
    if cfg.output.csv:
        atomic_write(out / "sweep.csv", table_text(header, table))
    summary = {"command": "sweep", "key": sw.key, "rows": rows}
    if cfg.output.json:
        write_json(out / "sweep.json", summary)
    return summary
