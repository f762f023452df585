"""Command-line front end: ``simulate``, ``analyze``, ``optimize`` and ``compare``.

Every run writes plain data (CSV time series, JSON summaries); no plotting.
Exit codes: 0 success (including a sweep that did not converge),
2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    basic_reproduction_number,
    classify_equilibria,
    endemic_equilibrium,
    level_set_bounds,
    metzler_comparison,
)
from .config import ConfigError, ScenarioConfig, apply_overrides, load_config_dict, parse_config
from .control import (
    ControlSignal,
    SweepError,
    _simpson_weights,
    objective,
    simulate_controlled,
    sweep_solve,
)
from .integrate import IntegrationError, integrate, sample
from .model import DimensionalParams, nondimensionalize, rhs_dimensionless, rhs_full

__all__ = ["main", "run_simulate", "run_analyze", "run_optimize", "run_compare"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TIMESERIES_HEADER = ["t", "S_h", "I_h", "R_h", "S_v", "I_v", "D", "u"]
ADJOINT_HEADER = ["t", "p1", "p2", "p3", "p4", "p5"]


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _timeseries_rows(grid, states, u):
    """Rows for the fixed CSV layout; 5-column states leave R_h blank."""
    for t, y, uk in zip(grid, states, u):
        if len(y) == 6:
            yield [t, *y, uk]
        else:
            yield [t, y[0], y[1], None, y[2], y[3], y[4], uk]


def units_tag(cfg: ScenarioConfig) -> dict:
    if cfg.model_form == "dimensional":
        return {
            "model_form": "dimensional",
            "time": "days",
            "states": "hosts, vectors, predators",
            "control": "predators/day",
        }
    return {
        "model_form": "dimensionless",
        "time": "tau = mu_v * t",
        "states": "S_h, I_h per N_h; S_v, I_v per mu_D/eta; D per mu_v/alpha",
        "control": "u_dimensional * alpha / mu_v**2",
    }


def _dimensionless(cfg: ScenarioConfig):
    if isinstance(cfg.params, DimensionalParams):
        return nondimensionalize(cfg.params)
    return cfg.params, None


def _threshold_summary(cfg: ScenarioConfig, k0s=None) -> dict:
    dimless, scales = _dimensionless(cfg)
    k0s = cfg.k0 if k0s is None else k0s
    return {
        "R0": basic_reproduction_number(dimless),
        "dimensionless_params": dimless.to_dict(),
        "eco_r0": [{"k0": float(k), "eco_r0": level_set_bounds(k, dimless).eco_r0} for k in k0s],
        "equilibria": [{"label": r.label, "classification": r.classification} for r in classify_equilibria(dimless)],
    }


def _grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.T, cfg.sweep.n + 1)


def _run_metrics(grid, states, u) -> dict:
    wts = _simpson_weights(len(grid) - 1, grid[-1] / (len(grid) - 1))
    I_h = states[:, 1]
    k = int(np.argmax(I_h))
    return {
        "peak_I_h": float(I_h[k]),
        "peak_time": float(grid[k]),
        "cumulative_I_h": float(wts @ I_h),
        "control_effort": float(wts @ u),
    }


def _base_doc(command: str, cfg: ScenarioConfig) -> dict:
    return {
        "command": command,
        "version": __version__,
        "units": units_tag(cfg),
        "config": cfg.to_dict(),
    }


def run_simulate(cfg: ScenarioConfig, out_dir) -> dict:
    """Uncontrolled run of the configured model form over ``[0, T]``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    if cfg.model_form == "dimensional":
        traj = integrate(lambda t, y: rhs_full(y, cfg.params), np.asarray(cfg.initial_state), (0.0, cfg.T), cfg.solver)
    else:
        traj = integrate(lambda t, y: rhs_dimensionless(y, cfg.params), np.asarray(cfg.initial_state), (0.0, cfg.T), cfg.solver)
    states = sample(traj, grid)
    u = np.zeros_like(grid)
    _write_csv(out / "timeseries.csv", TIMESERIES_HEADER, _timeseries_rows(grid, states, u))

    zero = ControlSignal(grid, u, cfg.weights.u_max)
    summary = _threshold_summary(cfg)
    summary.update({
        "J_uncontrolled": objective(traj, zero, cfg.weights),
        "J_optimal": None,
        "iterations": None,
        "converged": None,
        "uncontrolled": _run_metrics(grid, states, u),
        "controlled": None,
    })
    doc = _base_doc("simulate", cfg)
    doc["summary"] = summary
    _write_json(out / "summary.json", doc)
    return doc


def run_analyze(cfg: ScenarioConfig, out_dir, k0s=None) -> dict:
    """Thresholds, equilibria with spectra, and level-set bounds per ``k0``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dimless, scales = _dimensionless(cfg)
    k0s = cfg.k0 if k0s is None else tuple(k0s)
    ee = endemic_equilibrium(dimless)
    level_sets = []
    for k in k0s:
        bounds = level_set_bounds(k, dimless)
        m, stable = metzler_comparison(dimless, k)
        entry = bounds.to_dict()
        entry.update({"metzler_matrix": m.tolist(), "metzler_stable": stable})
        level_sets.append(entry)
    summary = {
        "R0": basic_reproduction_number(dimless),
        "dimensionless_params": dimless.to_dict(),
        "scales": None if scales is None else scales.to_dict(),
        "endemic_exists": ee is not None,
        "equilibria": [r.to_dict() for r in classify_equilibria(dimless)],
        "level_sets": level_sets,
    }
    doc = _base_doc("analyze", cfg)
    doc["config"]["k0"] = [float(k) for k in k0s]
    doc["summary"] = summary
    _write_json(out / "summary.json", doc)
    return doc


def run_optimize(cfg: ScenarioConfig, out_dir) -> dict:
    """Forward-backward sweep plus an uncontrolled baseline on the same grid."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    w = cfg.weights
    x0 = np.asarray(cfg.x0)
    result = sweep_solve(cfg.params, w, x0, cfg.sweep)
    grid = result.control.grid
    u = result.control.values

    zero = ControlSignal(grid, np.zeros_like(grid), w.u_max)
    baseline = simulate_controlled(cfg.params, x0, zero, cfg.solver)

    controlled_states = sample(result.state, grid)
    baseline_states = sample(baseline, grid)
    _write_csv(out / "timeseries.csv", TIMESERIES_HEADER, _timeseries_rows(grid, controlled_states, u))
    _write_csv(out / "baseline.csv", TIMESERIES_HEADER, _timeseries_rows(grid, baseline_states, zero.values))
    costate = sample(result.adjoint, grid)
    _write_csv(out / "adjoint.csv", ADJOINT_HEADER, ([t, *p] for t, p in zip(grid, costate)))

    summary = _threshold_summary(cfg)
    summary.update({
        "J_uncontrolled": objective(baseline, zero, w),
        "J_optimal": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "final_change": result.final_change,
        "law_residual": result.law_residual,
        "returned_iteration": result.best_iteration,
        "objective_history": list(result.objective_history),
        "relaxation": "u_next = d * u_prev + (1 - d) * u_star",
        "uncontrolled": _run_metrics(grid, baseline_states, zero.values),
        "controlled": _run_metrics(grid, controlled_states, u),
    })
    doc = _base_doc("optimize", cfg)
    doc["summary"] = summary
    _write_json(out / "summary.json", doc)
    return doc


def run_compare(cfg_a: ScenarioConfig, cfg_b: ScenarioConfig, out_dir) -> dict:
    """Optimize two scenarios sharing a model form and report key metrics side by side."""
    if cfg_a.model_form != cfg_b.model_form:
        raise ConfigError(f"model_form: scenarios differ ({cfg_a.model_form!r} vs {cfg_b.model_form!r})")
    out = Path(out_dir)
    docs = {"a": run_optimize(cfg_a, out / "a"), "b": run_optimize(cfg_b, out / "b")}

    def metrics(doc):
        s = doc["summary"]
        return {
            "T": doc["config"]["T"],
            "J_optimal": s["J_optimal"],
            "J_uncontrolled": s["J_uncontrolled"],
            "converged": s["converged"],
            "peak_I_h": s["controlled"]["peak_I_h"],
            "cumulative_I_h": s["controlled"]["cumulative_I_h"],
            "control_effort": s["controlled"]["control_effort"],
        }

    a, b = metrics(docs["a"]), metrics(docs["b"])
    numeric = ("T", "J_optimal", "J_uncontrolled", "peak_I_h", "cumulative_I_h", "control_effort")
    doc = {
        "command": "compare",
        "version": __version__,
        "units": units_tag(cfg_a),
        "a": a,
        "b": b,
        "diff_b_minus_a": {k: b[k] - a[k] for k in numeric},
    }
    _write_json(out / "compare.json", doc)
    return doc


def _diagnostic(message: str) -> None:
    color = sys.stderr.isatty() and not os.environ.get("NO_COLOR")
    prefix = "\033[31merror:\033[0m" if color else "error:"
    print(f"{prefix} {message}", file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sirsi-lv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_configs=1):
        if n_configs == 1:
            p.add_argument("--config", help="scenario JSON (default: packaged table1.json scenario)")
        else:
            p.add_argument("--config", action="append", default=[], metavar="PATH",
                           help="give twice: scenario A then scenario B (missing ones use the packaged default)")
        p.add_argument("--out", help="output directory (default: config output_dir or '.')")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dot-path override, e.g. weights.c=0 (repeatable)")

    common(sub.add_parser("simulate", help="uncontrolled run, writes timeseries.csv and summary.json"))
    p_an = sub.add_parser("analyze", help="R0, equilibria, level-set bounds")
    common(p_an)
    p_an.add_argument("--k0", action="append", type=float, default=None, help="level value k0 <= -2 (repeatable)")
    common(sub.add_parser("optimize", help="forward-backward sweep, writes CSVs and summary.json"))
    p_cmp = sub.add_parser("compare", help="optimize two scenarios and diff them")
    common(p_cmp, n_configs=2)
    p_cmp.add_argument("--override-a", action="append", default=[], metavar="KEY=VALUE")
    p_cmp.add_argument("--override-b", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _resolve(path, overrides) -> ScenarioConfig:
    return parse_config(apply_overrides(load_config_dict(path), overrides))


def main(argv: Optional[list] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            paths = list(args.config) + [None] * (2 - len(args.config))
            if len(paths) > 2:
                raise ConfigError("--config: compare takes at most two scenarios")
            cfg_a = _resolve(paths[0], args.override + args.override_a)
            cfg_b = _resolve(paths[1], args.override + args.override_b)
            out = args.out or cfg_a.output_dir or "."
            run_compare(cfg_a, cfg_b, out)
        else:
            cfg = _resolve(args.config, args.override)
            out = args.out or cfg.output_dir or "."
            if args.command == "simulate":
                run_simulate(cfg, out)
            elif args.command == "analyze":
                if args.k0 is not None:
                    bad = [k for k in args.k0 if not k <= -2]
                    if bad:
                        raise ConfigError(f"--k0: must be <= -2, got {bad[0]}")
                run_analyze(cfg, out, args.k0)
            else:
                run_optimize(cfg, out)
    except ConfigError as exc:
        _diagnostic(str(exc))
        return EXIT_CONFIG
    except (IntegrationError, SweepError) as exc:
        _diagnostic(str(exc))
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
