"""Command-line interface: segment CSV series, simulate presets, run experiments.

Exit codes: 0 success, 2 usage or input error, 3 internal numeric failure.
Reports are JSON documents with a versioned schema; experiment summaries
are additionally written as flat CSV next to the JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict

import numpy as np
from scipy.special import ndtri
from scipy.stats import norm

from . import experiment as exp
from .core import TimeSeries, relative_locations
from .ga import GaConfig, run
from .mdl import QuantileSpec, optimal_weights
from .simgen import PRESET_NAMES, simulate_preset

SCHEMA_VERSION = "1.0"


class InputError(Exception):
    """Bad usage or unreadable/invalid input: exit code 2."""


def read_series_csv(path: str) -> TimeSeries:
    """One value per line, or (index, value) pairs; optional header line."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        cell = fields[1] if len(fields) >= 2 else fields[0]
        try:
            values.append(float(cell))
        except ValueError:
            if lineno == 1 and not values:
                continue  # header
            raise InputError(f"{path}: non-numeric value {cell!r} on row {lineno}") from None
    if not values:
        raise InputError(f"{path}: no numeric rows found")
    try:
        return TimeSeries(np.array(values))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _ga_config_args(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("search configuration")
    g.add_argument("--islands", type=int, default=40)
    g.add_argument("--subpopulation", type=int, default=40)
    g.add_argument("--migration-interval", type=int, default=5)
    g.add_argument("--migrants", type=int, default=2)
    g.add_argument("--stall-limit", type=int, default=20)
    g.add_argument("--max-generations", type=int, default=100)
    g.add_argument("--max-order", type=int, default=20)


def _build_config(args, seed: int) -> GaConfig:
    return GaConfig(
        islands=args.islands,
        subpopulation=args.subpopulation,
        migration_interval=args.migration_interval,
        migrants=args.migrants,
        stall_limit=args.stall_limit,
        max_generations=args.max_generations,
        max_order=args.max_order,
        seed=seed,
    )


def _parse_taus(raw: list[str]) -> list[float]:
    taus = []
    for item in raw:
        for tok in item.split(","):
            tok = tok.strip()
            if tok:
                taus.append(float(tok))
    if not taus:
        raise InputError("at least one --tau is required")
    for t in taus:
        if not 0.0 < t < 1.0:
            raise InputError(f"tau={t} outside (0, 1)")
    if sorted(taus) != taus or len(set(taus)) != len(taus):
        raise InputError("quantiles must be strictly increasing")
    return taus


def _build_spec(taus: list[float], weights_arg: str) -> QuantileSpec:
    if weights_arg == "equal":
        return QuantileSpec.equal(taus)
    if weights_arg == "optimal":
        # reference density: standard normal evaluated at its own quantiles
        v = norm.pdf(ndtri(np.array(taus)))
        w = optimal_weights(taus, v)
        return QuantileSpec(tuple(taus), tuple(w))
    try:
        w = [float(x) for x in weights_arg.split(",")]
    except ValueError:
        raise InputError(f"bad --weights value {weights_arg!r}") from None
    if len(w) != len(taus):
        raise InputError("--weights list must match the number of quantiles")
    total = sum(w)
    if total <= 0:
        raise InputError("--weights must have a positive sum")
    return QuantileSpec(tuple(taus), tuple(x / total for x in w))


def load_report(path: str) -> dict:
    """Read a report, rejecting unknown major schema versions."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    version = str(doc.get("schema_version", ""))
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise InputError(f"unsupported report schema version {version!r}")
    return doc


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_segment(args) -> int:
    series = read_series_csv(args.input)
    taus = _parse_taus(args.tau)
    spec = _build_spec(taus, args.weights)
    config = _build_config(args, args.seed)
    t0 = time.perf_counter()
    result = run(series, spec, config)
    wall = time.perf_counter() - t0
    seg = result.segmentation
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "segmentation_report",
        "input": args.input,
        "n": seg.n,
        "m_hat": seg.m,
        "breaks": list(seg.breaks),
        "relative_locations": list(relative_locations(seg)),
        "orders": list(seg.orders),
        "quantiles": [
            {
                "tau": tau,
                "weight": weight,
                "segments": [
                    {"theta": fit.theta.tolist(), "loss": fit.loss, "degenerate": fit.degenerate}
                    for fit in fits
                ],
            }
            for tau, weight, fits in zip(spec.taus, spec.weights, result.fits_per_quantile)
        ],
        "mdl": {
            "total": result.score.total,
            "structure": result.score.structure,
            "residual": result.score.residual,
            "per_quantile": None
            if result.score.per_quantile is None
            else [
                {"tau": t, "weight": w, "total": s.total, "structure": s.structure, "residual": s.residual}
                for t, w, s in result.score.per_quantile
            ],
        },
        "config": asdict(config),
        "seed": args.seed,
        "generations": result.generations,
        "evaluations": result.evaluations,
    }
    if args.timing:
        doc["timing"] = {"wall_time_s": wall}
    _write_json(args.out, doc)
    if args.emit_plot_data:
        _write_plot_data(args.emit_plot_data, series, spec, result)
    return 0


def _write_plot_data(path: str, series: TimeSeries, spec: QuantileSpec, result) -> None:
    """(t, y, fitted quantile per tau, is_break) columns for external plotting."""
    seg = result.segmentation
    n = series.n
    fitted = {tau: [""] * n for tau in spec.taus}
    for tau, fits in zip(spec.taus, result.fits_per_quantile):
        for j, fit in enumerate(fits):
            a, b = seg.segment_range(j)
            t0 = max(a, seg.orders[j] + 1)
            for offset, t in enumerate(range(t0, b + 1)):
                fitted[tau][t - 1] = f"{series.value(t) - fit.residuals[offset]:.10g}"
    breaks = set(seg.breaks)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "y"] + [f"fit_tau_{tau:g}" for tau in spec.taus] + ["is_break"])
        for t in range(1, n + 1):
            writer.writerow(
                [t, f"{series.value(t):.10g}"]
                + [fitted[tau][t - 1] for tau in spec.taus]
                + [1 if t in breaks else 0]
            )


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise InputError("--n must be positive")
    try:
        real = simulate_preset(args.preset, args.n, np.random.default_rng(args.seed))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "y"])
        for t, y in enumerate(real.series.values, start=1):
            writer.writerow([t, f"{y:.17g}"])
    meta = {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation_metadata",
        "preset": real.preset,
        "n": real.series.n,
        "seed": args.seed,
        "true_m": real.true_m,
        "true_breaks": list(real.true_breaks),
        "true_lambdas": list(real.true_lambdas),
        "segments": list(real.segments),
    }
    _write_json(args.out + ".meta.json", meta)
    return 0


def cmd_experiment(args) -> int:
    if args.reps < 1:
        raise InputError("--reps must be at least 1")
    if args.preset not in PRESET_NAMES:
        raise InputError(f"unknown preset {args.preset!r}")
    modes = []
    for item in args.tau:
        for tok in item.split(","):
            tok = tok.strip()
            if not tok:
                continue
            if tok != "mult":
                t = float(tok)
                if not 0.0 < t < 1.0:
                    raise InputError(f"tau={tok} outside (0, 1)")
            modes.append(tok)
    if not modes:
        raise InputError("at least one --tau mode is required")
    config = _build_config(args, 0)

    def progress(mode, rep):
        if args.verbose:
            print(f"[{args.preset}] tau={mode} rep={rep + 1}/{args.reps}", file=sys.stderr)

    summary = exp.run_experiment(
        args.preset, args.n, args.reps, modes, config, args.seed, progress=progress
    )
    _write_json(args.out, summary.to_dict())
    csv_path = args.out + ".csv" if not args.out.endswith(".json") else args.out[:-5] + ".csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(summary.csv_rows())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qarseg",
        description="Piecewise quantile autoregression segmentation of time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment a CSV time series")
    p_seg.add_argument("input", help="CSV file: one value per line or (index,value) rows")
    p_seg.add_argument("--tau", action="append", required=True, help="quantile level(s), repeatable or comma-separated")
    p_seg.add_argument("--weights", default="equal", help="'equal', 'optimal', or an explicit comma list")
    p_seg.add_argument("--seed", type=int, default=0)
    p_seg.add_argument("--out", required=True, help="report JSON path")
    p_seg.add_argument("--emit-plot-data", metavar="CSV", help="write (t, y, fitted quantiles, breaks) columns")
    p_seg.add_argument("--timing", action="store_true", help="include wall time in the report")
    _ga_config_args(p_seg)
    p_seg.set_defaults(func=cmd_segment)

    p_sim = sub.add_parser("simulate", help="simulate a named preset process")
    p_sim.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="series CSV path (metadata sidecar written next to it)")
    p_sim.set_defaults(func=cmd_simulate)

    p_exp = sub.add_parser("experiment", help="replicated detection experiment on a preset")
    p_exp.add_argument("--preset", required=True)
    p_exp.add_argument("--n", type=int, required=True)
    p_exp.add_argument("--reps", type=int, required=True)
    p_exp.add_argument("--tau", action="append", required=True, help="quantile level or 'mult', repeatable")
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--out", required=True, help="summary JSON path (flat CSV written next to it)")
    p_exp.add_argument("--verbose", action="store_true")
    _ga_config_args(p_exp)
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
