import dataclasses
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.optimize import brentq

from roadwarn import detector as D
from roadwarn.detector import (BACKENDS, ChannelState, DetectorConfig, ImaState, TraceOrderError,
                               clamp_to_sensor_range, ima_update, init, process_trace, run_trace,
                               step)
from roadwarn.photometry import AmbientModel, Trace, TraceSample, synthesize_trace
from roadwarn.suite import standard_suite

from conftest import sedan_scenario, two_channel

BACKEND_NAMES = sorted(BACKENDS)


def ima_closed_form(alpha, v0, c, n):
    return alpha ** n * v0 + (1 - alpha ** n) * c


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.9, 0.99, 1.0])
def test_ima_matches_closed_form(alpha):
    s = ImaState(3.0, alpha)
    for n in range(1, 1001):
        s = ima_update(s, 10.0)
        expected = ima_closed_form(alpha, 3.0, 10.0, n)
        assert s.value == pytest.approx(expected, rel=1e-12)


def test_ima_extremes_and_rejection():
    assert ima_update(ImaState(7.0, 0.0), 2.5).value == 2.5
    assert ima_update(ImaState(7.0, 1.0), 2.5).value == 7.0
    with pytest.raises(ValueError):
        ima_update(ImaState(1.0, 0.5), -0.1)
    with pytest.raises(ValueError):
        ImaState(1.0, 1.5)


def test_ima_stays_within_input_hull(rng):
    xs = rng.uniform(0.2, 9.0, 500)
    s = ImaState(1.0, 0.9)
    lo, hi = 1.0, 1.0
    for x in xs:
        s = ima_update(s, x)
        lo, hi = min(lo, x), max(hi, x)
        assert lo <= s.value <= hi


def test_clamp():
    assert clamp_to_sensor_range(100000.0) == 88000.0
    assert clamp_to_sensor_range(1e-6) == 1.88e-4
    assert clamp_to_sensor_range(50.0) == 50.0


def test_config_invariants():
    with pytest.raises(ValueError):
        DetectorConfig(alpha_baseline=0.8, alpha_instant=0.85)
    with pytest.raises(ValueError):
        DetectorConfig(trigger_ratio=1.0)
    with pytest.raises(ValueError):
        DetectorConfig(release_ratio=2.5)
    with pytest.raises(ValueError):
        DetectorConfig(sensor_min=1.0, sensor_max=0.5)
    cfg = DetectorConfig(trigger_ratio=3.0)
    assert DetectorConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown"):
        DetectorConfig.from_dict({"threshold": 2})


def test_init_seeds_both_filters():
    cfg = DetectorConfig()
    st = init(cfg, 0.01)
    for ch in (st.a, st.b):
        assert ch.baseline.value == ch.instant.value == 0.01
        assert ch.ratio(cfg) == 1.0
        assert ch.baseline.alpha == cfg.alpha_baseline
        assert ch.instant.alpha == cfg.alpha_instant
    st = init(cfg, 1e-9)
    assert st.a.baseline.value == st.a.instant.value == 1.88e-4


def test_steady_state_never_triggers():
    cfg = DetectorConfig()
    st = init(cfg, 0.01)
    for k in range(100):
        st, ev = step(st, TraceSample(k / 20, "a", 0.01), cfg)
        assert ev is None
        assert st.a.ratio(cfg) == 1.0


def test_step_threshold_arithmetic():
    # a frozen baseline and a memoryless instant make the ratio exactly instant / baseline
    cfg = DetectorConfig(alpha_baseline=1.0, alpha_instant=0.0)
    st = init(cfg, 0.01)
    st, ev = step(st, TraceSample(0.05, "a", 0.05), cfg)
    assert ev is not None
    assert ev.ratio_at_trigger == pytest.approx(5.0, rel=1e-12)
    assert (ev.t, ev.channel, ev.instant_lux, ev.baseline_lux) == (0.05, "a", 0.05, 0.01)


def step_crossing_samples(cfg, k):
    """Continuous sample count n at which the step ratio first reaches the trigger."""
    ab, ai, trig = cfg.alpha_baseline, cfg.alpha_instant, cfg.trigger_ratio

    def ratio(n):
        return (1 + (k - 1) * (1 - ai ** n)) / (1 + (k - 1) * (1 - ab ** n)) - trig
    return brentq(ratio, 1e-9, 200.0, xtol=1e-12)


@pytest.mark.parametrize("k", [3.0, 10.0, 100.0])
@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_step_response_delay(k, backend):
    cfg = DetectorConfig()
    rate, level, n_pre = 20.0, 0.05, 200
    lux = np.r_[np.full(n_pre, level), np.full(200, k * level)]
    events = run_trace(two_channel(lux, rate=rate), cfg, backend=backend)
    t_step = n_pre / rate
    n_star = step_crossing_samples(cfg, k)
    expected = t_step + (n_star - 1) / rate
    assert events
    assert abs(events[0].t - expected) <= 1 / rate
    assert events[0].ratio_at_trigger >= cfg.trigger_ratio


def test_held_step_suppresses_then_releases():
    cfg = DetectorConfig(holdoff=1.0)
    rate = 20.0
    lux = np.r_[np.full(100, 0.05), np.full(int(120 * rate), 5.0), np.full(int(60 * rate), 0.05),
                np.full(40, 5.0)]
    run = process_trace(two_channel(lux, rate=rate), cfg)
    on = [c for c in run.suppression if c.suppressed]
    off = [c for c in run.suppression if not c.suppressed]
    assert len(on) == 1 and len(off) == 1
    t_on, t_off = on[0].t, off[0].t
    assert t_on - 5.0 > cfg.max_continuous_active
    assert not [e for e in run.events if t_on <= e.t < t_off]
    assert [e for e in run.events if e.t > t_off]


def test_constant_trace_no_events():
    assert run_trace(two_channel(np.full(2000, 0.3)), DetectorConfig()) == []


def test_single_sedan_one_event_beyond_60_ft():
    spec = sedan_scenario()
    v = spec.vehicles[0]
    events = run_trace(synthesize_trace(spec), DetectorConfig())
    before = [e for e in events if e.t <= v.passby_time]
    assert len(before) == 1
    assert v.position(before[0].t) >= 60.0


def test_holdoff_and_ratio_invariants():
    cfg = DetectorConfig(holdoff=2.0)
    spec = standard_suite()[0]
    events = run_trace(synthesize_trace(spec), cfg)
    assert events
    for ch in "ab":
        ts = [e.t for e in events if e.channel == ch]
        assert all(b - a >= cfg.holdoff for a, b in zip(ts, ts[1:]))
    assert all(e.ratio_at_trigger >= cfg.trigger_ratio for e in events)


@pytest.mark.parametrize("k", [0.01, 1.0, 100.0])
def test_scale_invariance_without_clamping(k):
    cfg = DetectorConfig(clamp=False)
    trace = synthesize_trace(dataclasses.replace(
        standard_suite()[0], ambient=AmbientModel(0.05, 0.0, 0.0), duration=1500.0,
        vehicles=tuple(v for v in standard_suite()[0].vehicles if v.passby_time < 1500.0)))
    base = [(e.t, e.channel) for e in run_trace(trace, cfg)]
    scaled = [(e.t, e.channel) for e in run_trace(trace.scaled(k), cfg)]
    assert base and scaled == base


def test_channel_b_permutation_does_not_touch_channel_a(rng):
    spec = standard_suite()[0]
    trace = synthesize_trace(dataclasses.replace(spec, duration=1500.0, vehicles=tuple(
        v for v in spec.vehicles if v.passby_time < 1500.0)))
    cfg = DetectorConfig()
    ref = [e for e in run_trace(trace, cfg) if e.channel == "a"]
    lux = trace.lux.copy()
    b = np.flatnonzero(trace.channel == 1)
    lux[b] = lux[b][rng.permutation(len(b))]
    shuffled = Trace(trace.t, trace.channel, lux)
    assert [e for e in run_trace(shuffled, cfg) if e.channel == "a"] == ref


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_stream_equals_batch(backend):
    cfg = DetectorConfig()
    trace = synthesize_trace(sedan_scenario(ambient=AmbientModel(0.05, 0.0, 0.3)))
    batch = process_trace(trace, cfg, backend=backend)
    st = init(cfg, {"a": float(trace.lux[0]), "b": float(trace.lux[1])})
    streamed = []
    for s in trace.samples():
        st, ev = step(st, s, cfg, backend=backend)
        if ev is not None:
            streamed.append(ev)
    assert streamed == batch.events
    assert st == batch.state


def test_concatenation_with_carried_state():
    cfg = DetectorConfig()
    trace = synthesize_trace(standard_suite()[2])
    cut = 2 * 3500
    whole = process_trace(trace, cfg)
    first = process_trace(trace[:cut], cfg)
    second = process_trace(trace[cut:], cfg, state=first.state)
    assert first.events + second.events == whole.events
    assert first.suppression + second.suppression == whole.suppression
    assert second.state == whole.state


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")
def test_compiled_kernel_is_bit_identical():
    cfg = DetectorConfig()
    for spec in standard_suite():
        trace = synthesize_trace(spec)
        py = process_trace(trace, cfg, backend="python")
        cy = process_trace(trace, cfg, backend="cython")
        assert py.events == cy.events
        assert py.suppression == cy.suppression
        for ch in "ab":
            assert (py.state.channel(ch).to_array().tobytes()
                    == cy.state.channel(ch).to_array().tobytes())


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_out_of_order_timestamp_rejected(backend):
    trace = two_channel(np.full(50, 0.05))
    t = trace.t.copy()
    t[20], t[22] = t[22], t[20]
    with pytest.raises(TraceOrderError) as info:
        run_trace(Trace(t, trace.channel, trace.lux), DetectorConfig(), backend=backend)
    assert info.value.index == 22


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_negative_sample_rejected(backend):
    trace = two_channel(np.full(50, 0.05))
    lux = trace.lux.copy()
    lux[31] = -1.0
    with pytest.raises(D.NegativeSampleError) as info:
        run_trace(Trace(trace.t, trace.channel, lux), DetectorConfig(), backend=backend)
    assert info.value.index == 31


def test_step_rejects_time_going_backwards():
    cfg = DetectorConfig()
    st, _ = step(init(cfg, 0.05), TraceSample(1.0, "a", 0.05), cfg)
    with pytest.raises(TraceOrderError):
        step(st, TraceSample(0.5, "a", 0.05), cfg)


def test_channel_state_array_roundtrip():
    cfg = DetectorConfig()
    ch = ChannelState(ImaState(0.1, cfg.alpha_baseline), ImaState(0.3, cfg.alpha_instant),
                      active_since=4.0, suppressed=True, last_trigger_t=None, last_t=7.5)
    assert ChannelState.from_array(ch.to_array(), cfg) == ch
    assert math.isnan(ch.to_array()[4])


def test_fallback_selected_by_environment():
    env = dict(os.environ, ROADWARN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import roadwarn.detector as d; print(d.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
