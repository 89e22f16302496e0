"""End-to-end scenario runs, detection-to-vehicle matching and metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .deterrent import DeterrentEvent, SoundPool, VisualConfig, schedule
from .detector import DetectionEvent, DetectorConfig, DetectorRun, process_trace
from .photometry import CHANNELS, VEHICLE_CLASSES, Trace, scenario_rngs, synthesize_trace

FAILURE_DISTANCE_FT = 60.0
# a detection this soon after pass-by is the filter still settling on that
# vehicle's light, not a false alarm
PRESENCE_TAIL_S = 1.0
DEFAULT_BIN_EDGES = tuple(float(x) for x in range(0, 601, 60)) + (math.inf,)
METRICS_SCHEMA = "roadwarn.metrics/1"


@dataclass(frozen=True)
class GroundTruthPass:
    vehicle_index: int
    vehicle_class: str
    channel: str
    speed_fps: float
    t_entry: float
    t_at_60ft: float
    t_passby: float

    def distance_at(self, t: float) -> float:
        return self.speed_fps * (self.t_passby - t)

    def in_window(self, t: float) -> bool:
        return self.t_entry <= t <= self.t_passby


def ground_truth(vehicles) -> list[GroundTruthPass]:
    passes = []
    for k, v in enumerate(vehicles):
        tp = v.passby_time
        passes.append(GroundTruthPass(k, v.vehicle_class, v.channel, v.speed_fps, v.entry_time,
                                      tp - FAILURE_DISTANCE_FT / v.speed_fps, tp))
    return passes


def trigger_lead(event: DetectionEvent, gt: GroundTruthPass) -> tuple[float, float]:
    """Lead time (s) and distance (ft) of a detection before the vehicle passes."""
    if not gt.in_window(event.t):
        raise ValueError(f"event at t={event.t} is outside vehicle {gt.vehicle_index}'s "
                         f"approach window [{gt.t_entry}, {gt.t_passby}]")
    lead = gt.t_passby - event.t
    return lead, gt.speed_fps * lead


@dataclass(frozen=True)
class TruePositive:
    vehicle_index: int
    vehicle_class: str
    event: DetectionEvent
    trigger_distance: float
    trigger_lead_time: float


@dataclass(frozen=True)
class Miss:
    """A vehicle that got no detection at or beyond the failure distance.

    ``cause`` is ``"late"`` (detected only inside 60 ft), ``"undetected"``
    (no detection while approaching) or ``"saturated"`` (the channel was
    suppressed during the approach).
    """

    vehicle_index: int
    vehicle_class: str
    cause: str
    event: DetectionEvent | None = None


@dataclass
class MatchResult:
    true_positives: list[TruePositive] = field(default_factory=list)
    false_negatives: list[Miss] = field(default_factory=list)
    false_positives: list[DetectionEvent] = field(default_factory=list)
    # extra detections while an already-matched vehicle is still present
    redundant: list[DetectionEvent] = field(default_factory=list)
    quiet_intervals: int = 0


def match_detections(events, passes, *, failure_distance: float = FAILURE_DISTANCE_FT,
                     presence_tail: float = PRESENCE_TAIL_S) -> MatchResult:
    """Attribute each detection to the nearest unmatched approaching vehicle.

    Events are taken in time order. A detection with no unmatched candidate
    but an already-matched vehicle still present (approaching, or passed
    less than ``presence_tail`` ago) is redundant; anything else is a false
    positive. A vehicle whose matched detection came inside
    ``failure_distance`` counts as a miss.
    """
    by_channel = {c: [p for p in passes if p.channel == c] for c in CHANNELS}
    matched: dict[int, DetectionEvent] = {}
    result = MatchResult()
    for e in sorted(events, key=lambda e: e.t):
        lane = by_channel.get(e.channel, [])
        best = None
        for p in lane:
            if p.vehicle_index in matched or not p.in_window(e.t):
                continue
            key = (p.distance_at(e.t), p.vehicle_index)
            if best is None or key < best[0]:
                best = (key, p)
        if best is not None:
            matched[best[1].vehicle_index] = e
        elif any(p.t_entry <= e.t <= p.t_passby + presence_tail for p in lane):
            result.redundant.append(e)
        else:
            result.false_positives.append(e)
    for p in passes:
        e = matched.get(p.vehicle_index)
        if e is None:
            result.false_negatives.append(Miss(p.vehicle_index, p.vehicle_class, "undetected"))
            continue
        lead, dist = trigger_lead(e, p)
        if dist >= failure_distance:
            result.true_positives.append(TruePositive(p.vehicle_index, p.vehicle_class, e,
                                                      dist, lead))
        else:
            result.false_negatives.append(Miss(p.vehicle_index, p.vehicle_class, "late", e))
    return result


def suppressed_intervals(changes, end: float = math.inf) -> dict[str, list[tuple[float, float]]]:
    out: dict[str, list[tuple[float, float]]] = {c: [] for c in CHANNELS}
    start: dict[str, float] = {}
    for ch in changes:
        if ch.suppressed:
            start.setdefault(ch.channel, ch.t)
        elif ch.channel in start:
            out[ch.channel].append((start.pop(ch.channel), ch.t))
    for c, t0 in start.items():
        out[c].append((t0, end))
    return out


def attribute_saturation(match: MatchResult, passes, changes) -> MatchResult:
    """Re-label misses whose approach overlapped a suppressed period."""
    intervals = suppressed_intervals(changes)
    by_index = {p.vehicle_index: p for p in passes}
    relabelled = []
    for miss in match.false_negatives:
        p = by_index[miss.vehicle_index]
        hit = any(lo <= p.t_passby and hi >= p.t_entry for lo, hi in intervals[p.channel])
        relabelled.append(Miss(miss.vehicle_index, miss.vehicle_class, "saturated", miss.event)
                          if hit else miss)
    match.false_negatives = relabelled
    return match


def count_quiet_intervals(passes, duration: float, slice_s: float,
                          presence_tail: float = PRESENCE_TAIL_S) -> int:
    """Per-channel slices of ``slice_s`` seconds with no vehicle present.

    These are the negatives against which false positives are rated.
    """
    if slice_s <= 0:
        slice_s = 1.0
    n = int(math.floor(duration / slice_s + 1e-9))
    quiet = 0
    for c in CHANNELS:
        windows = [(p.t_entry, p.t_passby + presence_tail) for p in passes if p.channel == c]
        for k in range(n):
            lo, hi = k * slice_s, (k + 1) * slice_s
            if not any(a < hi and b > lo for a, b in windows):
                quiet += 1
    return quiet


def _ratio(num, den):
    return num / den if den else None


@dataclass
class MetricsReport:
    """Detection metrics, mergeable across scenarios by summing counts.

    Rates are ``None`` when their denominator is zero. Means are recomputed
    from summed distances and times.
    """

    tp: int = 0
    fn: int = 0
    fp: int = 0
    redundant: int = 0
    quiet_intervals: int = 0
    sum_trigger_time: float = 0.0
    sum_trigger_distance: float = 0.0
    per_class: dict = field(default_factory=dict)  # class -> {tp, fn, sum_distance}
    fn_causes: dict = field(default_factory=dict)
    bin_edges: tuple = DEFAULT_BIN_EDGES
    histogram: dict = field(default_factory=dict)  # class -> counts per bin

    @property
    def recall(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def precision(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def false_positive_rate(self):
        return _ratio(self.fp, self.fp + self.quiet_intervals)

    @property
    def mean_trigger_time(self):
        return _ratio(self.sum_trigger_time, self.tp)

    @property
    def mean_trigger_distance(self):
        return _ratio(self.sum_trigger_distance, self.tp)

    @property
    def per_class_mean_distance(self) -> dict[str, float]:
        return {c: v["sum_distance"] / v["tp"] for c, v in sorted(self.per_class.items())
                if v["tp"]}

    def histogram_rows(self):
        edges = self.bin_edges
        for cls in sorted(self.histogram):
            for k, count in enumerate(self.histogram[cls]):
                yield cls, edges[k], edges[k + 1], count

    def merge(self, other: "MetricsReport") -> "MetricsReport":
        if tuple(self.bin_edges) != tuple(other.bin_edges):
            raise ValueError("cannot merge metrics with different histogram bin edges")
        per_class = {c: dict(v) for c, v in self.per_class.items()}
        for c, v in other.per_class.items():
            slot = per_class.setdefault(c, {"tp": 0, "fn": 0, "sum_distance": 0.0})
            for k in slot:
                slot[k] += v[k]
        histogram = {c: list(v) for c, v in self.histogram.items()}
        for c, counts in other.histogram.items():
            base = histogram.setdefault(c, [0] * len(counts))
            histogram[c] = [a + b for a, b in zip(base, counts)]
        causes = dict(self.fn_causes)
        for k, v in other.fn_causes.items():
            causes[k] = causes.get(k, 0) + v
        return MetricsReport(
            self.tp + other.tp, self.fn + other.fn, self.fp + other.fp,
            self.redundant + other.redundant, self.quiet_intervals + other.quiet_intervals,
            self.sum_trigger_time + other.sum_trigger_time,
            self.sum_trigger_distance + other.sum_trigger_distance,
            per_class, causes, tuple(self.bin_edges), histogram)

    def to_dict(self) -> dict:
        return {
            "schema": METRICS_SCHEMA,
            "counts": {"tp": self.tp, "fn": self.fn, "fp": self.fp,
                       "redundant": self.redundant, "quiet_intervals": self.quiet_intervals},
            "recall": self.recall,
            "precision": self.precision,
            "false_positive_rate": self.false_positive_rate,
            "mean_trigger_time_s": self.mean_trigger_time,
            "mean_trigger_distance_ft": self.mean_trigger_distance,
            "sum_trigger_time_s": self.sum_trigger_time,
            "sum_trigger_distance_ft": self.sum_trigger_distance,
            "per_class": {c: {**v, "mean_distance_ft": self.per_class_mean_distance.get(c)}
                          for c, v in sorted(self.per_class.items())},
            "fn_causes": dict(sorted(self.fn_causes.items())),
            "histogram": {
                "bin_edges_ft": [None if math.isinf(e) else e for e in self.bin_edges],
                "counts": {c: list(v) for c, v in sorted(self.histogram.items())},
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        if not isinstance(doc, dict) or doc.get("schema") != METRICS_SCHEMA:
            raise ValueError(f"not a {METRICS_SCHEMA} document")
        try:
            counts = doc["counts"]
            edges = tuple(math.inf if e is None else float(e)
                          for e in doc["histogram"]["bin_edges_ft"])
            hist = {c: [int(x) for x in v] for c, v in doc["histogram"]["counts"].items()}
            per_class = {c: {"tp": int(v["tp"]), "fn": int(v["fn"]),
                             "sum_distance": float(v["sum_distance"])}
                         for c, v in doc["per_class"].items()}
            if any(len(v) != len(edges) - 1 for v in hist.values()):
                raise ValueError("histogram counts do not match bin edges")
            return cls(int(counts["tp"]), int(counts["fn"]), int(counts["fp"]),
                       int(counts["redundant"]), int(counts["quiet_intervals"]),
                       float(doc["sum_trigger_time_s"]), float(doc["sum_trigger_distance_ft"]),
                       per_class, {k: int(v) for k, v in doc["fn_causes"].items()}, edges, hist)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed metrics document: missing or bad {exc}") from None


def compute_metrics(match: MatchResult, histogram_bins=DEFAULT_BIN_EDGES) -> MetricsReport:
    edges = np.asarray(histogram_bins, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("histogram bins must be strictly increasing with at least two edges")
    report = MetricsReport(bin_edges=tuple(float(e) for e in edges))
    report.tp = len(match.true_positives)
    report.fn = len(match.false_negatives)
    report.fp = len(match.false_positives)
    report.redundant = len(match.redundant)
    report.quiet_intervals = match.quiet_intervals
    nbins = len(edges) - 1
    for hit in match.true_positives:
        d = hit.trigger_distance
        k = int(np.searchsorted(edges, d, side="right")) - 1
        if not 0 <= k < nbins:
            raise ValueError(f"trigger distance {d} ft lies outside the histogram bins")
        report.histogram.setdefault(hit.vehicle_class, [0] * nbins)[k] += 1
        slot = report.per_class.setdefault(hit.vehicle_class,
                                           {"tp": 0, "fn": 0, "sum_distance": 0.0})
        slot["tp"] += 1
        slot["sum_distance"] += d
        report.sum_trigger_distance += d
        report.sum_trigger_time += hit.trigger_lead_time
    for miss in match.false_negatives:
        slot = report.per_class.setdefault(miss.vehicle_class,
                                           {"tp": 0, "fn": 0, "sum_distance": 0.0})
        slot["fn"] += 1
        report.fn_causes[miss.cause] = report.fn_causes.get(miss.cause, 0) + 1
    return report


@dataclass
class ScenarioRun:
    trace: Trace
    detector: DetectorRun
    deterrents: list[DeterrentEvent]
    passes: list[GroundTruthPass]

    @property
    def events(self) -> list[DetectionEvent]:
        return self.detector.events


def run_scenario(spec, detector_config: DetectorConfig, pool: SoundPool | None = None,
                 visual: VisualConfig | None = None, *, backend: str | None = None) -> ScenarioRun:
    """Synthesize the trace, detect, schedule deterrents and derive ground truth."""
    pool = SoundPool.default() if pool is None else pool
    visual = VisualConfig() if visual is None else visual
    try:
        trace = synthesize_trace(spec)
        run = process_trace(trace, detector_config, backend=backend)
    except ValueError as exc:
        raise ValueError(f"scenario {spec.name or '<unnamed>'} (seed {spec.seed}): {exc}") from exc
    _, deterrent_rng = scenario_rngs(spec.seed)
    deterrents = schedule(run.events, pool, visual, deterrent_rng)
    return ScenarioRun(trace, run, deterrents, ground_truth(spec.vehicles))


def evaluate_run(run: ScenarioRun, spec, config: DetectorConfig,
                 histogram_bins=DEFAULT_BIN_EDGES) -> tuple[MatchResult, MetricsReport]:
    match = match_detections(run.events, run.passes)
    attribute_saturation(match, run.passes, run.detector.suppression)
    match.quiet_intervals = count_quiet_intervals(run.passes, spec.duration, config.holdoff)
    return match, compute_metrics(match, histogram_bins)


def evaluate_suite(suite, config: DetectorConfig, histogram_bins=DEFAULT_BIN_EDGES, *,
                   backend: str | None = None) -> MetricsReport:
    total = MetricsReport(bin_edges=tuple(float(e) for e in histogram_bins))
    for spec in suite:
        run = run_scenario(spec, config, backend=backend)
        _, report = evaluate_run(run, spec, config, histogram_bins)
        total = total.merge(report)
    return total


__all__ = [
    "GroundTruthPass", "MatchResult", "MetricsReport", "Miss", "ScenarioRun", "TruePositive",
    "VEHICLE_CLASSES", "attribute_saturation", "compute_metrics", "count_quiet_intervals",
    "evaluate_run", "evaluate_suite", "ground_truth", "match_detections", "run_scenario",
    "trigger_lead",
]
