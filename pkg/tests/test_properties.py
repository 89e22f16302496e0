"""Randomized invariants of the filter, trigger and matcher."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from roadwarn.detector import (BACKENDS, DetectionEvent, DetectorConfig, ImaState, ima_update,
                               init, process_trace, step)
from roadwarn.evaluation import GroundTruthPass, compute_metrics, match_detections

from conftest import two_channel

lux_values = st.floats(min_value=0.0, max_value=1e4, allow_nan=False)


@given(v0=lux_values, xs=st.lists(lux_values, min_size=1, max_size=200),
       alpha=st.floats(0.0, 1.0))
def test_ima_is_a_convex_combination(v0, xs, alpha):
    s = ImaState(v0, alpha)
    lo = hi = v0
    for x in xs:
        s = ima_update(s, x)
        lo, hi = min(lo, x), max(hi, x)
        assert lo * (1 - 1e-12) <= s.value <= hi * (1 + 1e-12)


def piecewise(draw_levels, rate=20.0):
    return np.repeat(np.asarray(draw_levels, dtype=float), int(rate))


levels = st.lists(st.floats(0.01, 50.0), min_size=2, max_size=40)
configs = st.builds(
    DetectorConfig,
    alpha_baseline=st.sampled_from([0.99, 0.999, 0.9995]),
    alpha_instant=st.sampled_from([0.5, 0.85, 0.95]),
    trigger_ratio=st.sampled_from([1.5, 2.0, 3.0]),
    holdoff=st.sampled_from([0.0, 1.0, 5.0]),
    max_continuous_active=st.sampled_from([2.0, 30.0]),
)


@settings(max_examples=60, deadline=None)
@given(a=levels, b=levels, cfg=configs)
def test_events_respect_threshold_and_holdoff(a, b, cfg):
    n = min(len(a), len(b))
    run = process_trace(two_channel(piecewise(a[:n]), piecewise(b[:n])), cfg)
    for e in run.events:
        assert e.ratio_at_trigger >= cfg.trigger_ratio
    for ch in "ab":
        ts = [e.t for e in run.events if e.channel == ch]
        assert all(y - x >= cfg.holdoff for x, y in zip(ts, ts[1:]))


@settings(max_examples=40, deadline=None)
@given(a=levels, cfg=configs)
def test_backends_agree_and_stream_matches_batch(a, cfg):
    trace = two_channel(piecewise(a), piecewise(a[::-1]))
    runs = {name: process_trace(trace, cfg, backend=name) for name in BACKENDS}
    ref = runs["python"]
    for run in runs.values():
        assert run.events == ref.events and run.suppression == ref.suppression
    st_ = init(cfg, {"a": float(trace.lux[0]), "b": float(trace.lux[1])})
    streamed = []
    for s in trace.samples():
        st_, ev = step(st_, s, cfg)
        if ev is not None:
            streamed.append(ev)
    assert streamed == ref.events


@settings(max_examples=40, deadline=None)
@given(a=levels, k=st.sampled_from([0.01, 0.5, 3.0, 100.0]))
def test_power_of_two_scaling_is_exact(a, k):
    # powers of two scale without rounding, so every decision is identical
    cfg = DetectorConfig(clamp=False)
    trace = two_channel(piecewise(a))
    scale = 2.0 ** round(np.log2(k))
    ref = [(e.t, e.channel) for e in process_trace(trace, cfg).events]
    assert [(e.t, e.channel) for e in process_trace(trace.scaled(scale), cfg).events] == ref


@st.composite
def passes_and_events(draw):
    n = draw(st.integers(0, 6))
    passes = []
    for k in range(n):
        ch = draw(st.sampled_from("ab"))
        speed = draw(st.sampled_from([51.33, 66.0]))
        tp = draw(st.floats(30.0, 300.0))
        passes.append(GroundTruthPass(k, draw(st.sampled_from(["sedan_led", "semi"])), ch,
                                      speed, tp - 1500 / speed, tp - 60 / speed, tp))
    events = [DetectionEvent(draw(st.floats(0.0, 320.0)), draw(st.sampled_from("ab")),
                             2.0, 0.1, 0.05)
              for _ in range(draw(st.integers(0, 10)))]
    return passes, sorted(events, key=lambda e: e.t)


@settings(max_examples=200, deadline=None)
@given(data=passes_and_events(), extra=st.floats(0.0, 400.0), ch=st.sampled_from("ab"))
def test_matching_partition_and_stability(data, extra, ch):
    passes, events = data
    m = match_detections(events, passes)
    tp = {x.vehicle_index for x in m.true_positives}
    fn = {x.vehicle_index for x in m.false_negatives}
    assert tp.isdisjoint(fn) and tp | fn == {p.vehicle_index for p in passes}
    assert len(m.true_positives) + len(m.false_negatives) == len(passes)
    used = [id(x.event) for x in m.true_positives]
    assert len(used) == len(set(used))
    for x in m.true_positives:
        p = passes[x.vehicle_index]
        assert abs(x.trigger_distance - p.speed_fps * x.trigger_lead_time) <= 1e-9 * max(
            1.0, x.trigger_distance)
    r = compute_metrics(m)
    assert sum(sum(v) for v in r.histogram.values()) == r.tp
    for rate in (r.recall, r.precision, r.false_positive_rate):
        assert rate is None or 0.0 <= rate <= 1.0
    # an event where nothing is present on its channel is a pure false positive
    present = any(p.channel == ch and p.t_entry <= extra <= p.t_passby + 1.0 for p in passes)
    if not present:
        spur = DetectionEvent(extra, ch, 9.0, 1.0, 0.1)
        m2 = match_detections(sorted(events + [spur], key=lambda e: e.t), passes)
        assert {x.vehicle_index for x in m2.true_positives} == tp
        assert [(x.vehicle_index, x.cause) for x in m2.false_negatives] == \
               [(x.vehicle_index, x.cause) for x in m.false_negatives]
        assert len(m2.false_positives) == len(m.false_positives) + 1
