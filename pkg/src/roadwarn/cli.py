"""``roadwarn`` command line: simulate, replay, tune and report.

Exit status is 0 on success, 2 when an input file or argument is malformed
(the message names the file and the field or row), and 1 on any other
failure. Inputs are all read and validated before any work starts, and
outputs are staged so a failed run leaves nothing half-written.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .detector import process_trace
from .deterrent import schedule
from .evaluation import MetricsReport, evaluate_run, run_scenario
from .photometry import scenario_rngs
from .records import (DETECTION_COLUMNS, DETERRENT_COLUMNS, HISTOGRAM_COLUMNS, SCALAR_COLUMNS,
                      TRACE_COLUMNS, csv_text, detection_rows, deterrent_rows, json_text,
                      read_trace_csv, scalar_rows, trace_rows, write_atomic)
from .scenario import InputError, load_json, load_scenario, scenario_from_dict
from .suite import standard_suite
from .tuning import TUNABLE, tune_parameters


def _histogram_rows(report: MetricsReport):
    return list(report.histogram_rows())


def _metrics_doc(report: MetricsReport, seed, scenario: str = "") -> dict:
    doc = report.to_dict()
    doc["provenance"] = {"seed": seed, "version": __version__, "scenario": scenario}
    return doc


def _outputs_for_run(events, deterrents, seed) -> dict[str, str]:
    return {
        "detections.csv": csv_text(DETECTION_COLUMNS, detection_rows(events), seed),
        "deterrents.csv": csv_text(DETERRENT_COLUMNS, deterrent_rows(deterrents), seed),
    }


def cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario)
    cfg = load_config(args.config, args.set)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    run = run_scenario(spec, cfg.detector, cfg.pool, cfg.visual)
    _, report = evaluate_run(run, spec, cfg.detector, cfg.histogram_bins)
    files = {"trace.csv": csv_text(TRACE_COLUMNS, trace_rows(run.trace), spec.seed)}
    files.update(_outputs_for_run(run.events, run.deterrents, spec.seed))
    files["metrics.json"] = json_text(_metrics_doc(report, spec.seed, spec.name))
    write_atomic(files, args.out)
    return 0


def cmd_replay(args) -> int:
    trace, recorded_seed = read_trace_csv(args.trace)
    cfg = load_config(args.config, args.set)
    seed = args.seed if args.seed is not None else (recorded_seed or 0)
    run = process_trace(trace, cfg.detector)
    _, deterrent_rng = scenario_rngs(seed)
    deterrents = schedule(run.events, cfg.pool, cfg.visual, deterrent_rng)
    write_atomic(_outputs_for_run(run.events, deterrents, seed), args.out)
    return 0


def load_suite(path, seed_override=None):
    """Read a suite document; returns ``(scenarios, seed)``.

    Either ``{"standard": true, "seed": N}`` for the built-in 200-vehicle
    suite, or ``{"scenarios": [path-or-inline-scenario, ...]}`` with paths
    relative to the suite file.
    """
    path = Path(path)
    doc = load_json(path, "suite")
    where = str(path)
    if not isinstance(doc, dict):
        raise InputError("suite must be a JSON object", where)
    seed = doc.get("seed", 2021 if doc.get("standard") else 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InputError("seed must be a non-negative integer", f"{where}:seed")
    if seed_override is not None:
        seed = seed_override
    if doc.get("standard"):
        return standard_suite(seed), seed
    entries = doc.get("scenarios")
    if not isinstance(entries, list) or not entries:
        raise InputError("expected a non-empty 'scenarios' list or \"standard\": true",
                         f"{where}:scenarios")
    specs = []
    for i, entry in enumerate(entries):
        if isinstance(entry, str):
            specs.append(load_scenario(path.parent / entry))
        else:
            specs.append(scenario_from_dict(entry, f"{where}:scenarios[{i}]"))
    return specs, seed


def load_grid(path) -> dict:
    doc = load_json(path, "grid")
    where = str(path)
    if not isinstance(doc, dict) or not doc:
        raise InputError("grid must be a non-empty object of parameter -> list of values", where)
    for key, values in doc.items():
        if key not in TUNABLE:
            raise InputError(f"untunable parameter; choose from {TUNABLE}", f"{where}:{key}")
        if not isinstance(values, list) or not values:
            raise InputError("expected a non-empty list of values", f"{where}:{key}")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            raise InputError("values must be numbers", f"{where}:{key}")
    return doc


RANKING_COLUMNS = ("rank", "grid_index", *TUNABLE, "false_positive_rate", "recall", "precision",
                   "mean_trigger_distance_ft", "tp", "fn", "fp")


def cmd_tune(args) -> int:
    suite, seed = load_suite(args.suite, args.seed)
    grid = load_grid(args.grid)
    cfg = load_config(args.config, args.set)
    try:
        ranked = tune_parameters(grid, suite, base=cfg.detector, workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc), str(args.grid)) from None
    rows = []
    for rank, item in enumerate(ranked, start=1):
        c, r = item.config, item.report
        rows.append((rank, item.grid_index, *(getattr(c, n) for n in TUNABLE),
                     r.false_positive_rate, r.recall, r.precision, r.mean_trigger_distance,
                     r.tp, r.fn, r.fp))
    best = RunConfig(ranked[0].config, cfg.pool, cfg.visual, cfg.histogram_bins)
    write_atomic({"ranking.csv": csv_text(RANKING_COLUMNS, rows, seed),
                  "best_config.json": json_text(best.to_dict())}, args.out)
    return 0


def _load_metrics(path) -> tuple[MetricsReport, object]:
    doc = load_json(path, "metrics")
    try:
        return MetricsReport.from_dict(doc), doc.get("provenance", {}).get("seed")
    except ValueError as exc:
        raise InputError(str(exc), str(path)) from None


def cmd_report(args) -> int:
    loaded = [(p, *_load_metrics(p)) for p in args.metrics]
    path0, merged, _ = loaded[0]
    for path, report, _ in loaded[1:]:
        try:
            merged = merged.merge(report)
        except ValueError as exc:
            raise InputError(f"{exc} (first file: {path0})", str(path)) from None
    seeds = []
    for _, _, s in loaded:
        if s not in seeds:
            seeds.append(s)
    seed = "+".join("unknown" if s is None else str(s) for s in seeds)
    scalars = csv_text(SCALAR_COLUMNS, scalar_rows(merged), seed)
    histogram = csv_text(HISTOGRAM_COLUMNS, _histogram_rows(merged), seed)
    if args.out is None:
        sys.stdout.write(scalars)
        sys.stdout.write("\n")
        sys.stdout.write(histogram)
    else:
        doc = merged.to_dict()
        doc["provenance"] = {"seed": seed, "version": __version__,
                             "merged_from": [str(p) for p in args.metrics]}
        write_atomic({"metrics.csv": scalars, "histogram.csv": histogram,
                      "metrics.json": json_text(doc)}, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadwarn",
        description="Headlight-triggered roadside animal deterrent: simulate, replay, tune, report.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", type=Path, help="run config JSON (defaults if omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field by dotted key, e.g. detector.trigger_ratio=2.5")

    p = sub.add_parser("simulate", help="synthesize a scenario and run the detector on it")
    p.add_argument("--scenario", type=Path, required=True)
    add_config(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, help="override the scenario's seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="run the detector on a recorded trace CSV")
    p.add_argument("--trace", type=Path, required=True)
    add_config(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int,
                   help="deterrent seed (default: the seed recorded in the trace)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("tune", help="grid-search detector parameters over a scenario suite")
    p.add_argument("--suite", type=Path, required=True)
    p.add_argument("--grid", type=Path, required=True)
    add_config(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, help="override the suite seed")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("report", help="merge metrics documents into scalar and histogram CSVs")
    p.add_argument("metrics", type=Path, nargs="+")
    p.add_argument("--out", type=Path, help="write CSVs here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None and args.seed < 0:
        parser.error("--seed must be non-negative")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"roadwarn: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report, don't traceback
        print(f"roadwarn: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
