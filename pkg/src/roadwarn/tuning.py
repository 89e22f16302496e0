"""Exhaustive grid search over detector parameters."""
from __future__ import annotations

import dataclasses
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .detector import DetectorConfig
from .evaluation import MetricsReport, evaluate_suite

TUNABLE = ("alpha_baseline", "alpha_instant", "trigger_ratio", "holdoff")

DEFAULT_GRID = {
    "alpha_baseline": [0.9995, 0.9998, 0.9999],
    "alpha_instant": [0.7, 0.85, 0.95],
    "trigger_ratio": [1.5, 2.0, 3.0],
}


@dataclass
class Ranked:
    config: DetectorConfig
    report: MetricsReport
    grid_index: int


def expand_grid(param_grid: dict, base: DetectorConfig | None = None) -> list[DetectorConfig]:
    """Cartesian product of the grid applied on top of ``base``.

    Combinations that violate a config invariant (e.g. a release ratio no
    longer below the trigger) are dropped.
    """
    if not param_grid:
        raise ValueError("parameter grid is empty")
    unknown = set(param_grid) - set(TUNABLE)
    if unknown:
        raise ValueError(f"untunable parameters {sorted(unknown)}; choose from {TUNABLE}")
    names = sorted(param_grid, key=TUNABLE.index)
    values = [list(param_grid[n]) for n in names]
    if any(not v for v in values):
        raise ValueError("every grid parameter needs at least one value")
    base = base or DetectorConfig()
    configs = []
    for combo in itertools.product(*values):
        try:
            configs.append(dataclasses.replace(base, **dict(zip(names, combo))))
        except ValueError:
            continue
    if not configs:
        raise ValueError("no valid configuration in the grid")
    return configs


def rank_key(item: Ranked):
    r = item.report
    fpr = r.false_positive_rate or 0.0
    return (fpr != 0.0, -(r.recall or 0.0), -(r.mean_trigger_distance or 0.0), item.grid_index)


def _evaluate(args):
    config, suite = args
    return evaluate_suite(suite, config)


def tune_parameters(param_grid: dict, scenario_suite, *, base: DetectorConfig | None = None,
                    workers: int = 1) -> list[Ranked]:
    """Evaluate every grid point on the suite and rank the results.

    Zero false-positive rate comes first, then higher recall, then longer
    mean trigger distance; grid order breaks remaining ties.
    """
    suite = list(scenario_suite)
    if not suite:
        raise ValueError("scenario suite is empty")
    configs = expand_grid(param_grid, base)
    jobs = [(c, suite) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            reports = list(pool.map(_evaluate, jobs))
    else:
        reports = [_evaluate(j) for j in jobs]
    ranked = [Ranked(c, r, k) for k, (c, r) in enumerate(zip(configs, reports))]
    return sorted(ranked, key=rank_key)
