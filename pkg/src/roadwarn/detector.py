"""Dual inertial-moving-average headlight detector.

Each sensor channel keeps two inertial moving averages (IMAs) of the clamped
lux signal: a slow *baseline* that tracks ambient light and a fast
*instantaneous* level that follows the raw signal while smoothing noise. A
detection fires when instantaneous / baseline reaches the trigger ratio, at
most once per holdoff period. If the ratio stays above the trigger for longer
than ``max_continuous_active`` the channel is suppressed until the ratio
falls below ``release_ratio``, so prolonged bright light (a caravan of
vehicles) does not keep the deterrent running.

The per-sample fold lives in a compiled kernel (``_core``) when available,
otherwise in ``_core_py``. Set ``ROADWARN_PURE_PYTHON=1`` to force the
fallback.
"""
from __future__ import annotations

import dataclasses
import math
import os
import sys
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from . import _core_py
from .photometry import CHANNELS, Trace, TraceSample

try:
    if os.environ.get("ROADWARN_PURE_PYTHON"):
        raise ImportError("pure-Python backend forced")
    from . import _core as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _core_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
BACKEND = "cython" if _compiled is not None else "python"

SENSOR_MIN_LUX = 1.88e-4
SENSOR_MAX_LUX = 8.8e4


class TraceOrderError(ValueError):
    """A sample arrived with a timestamp earlier than its channel's previous one."""

    def __init__(self, index: int, t: float, previous: float):
        super().__init__(f"sample {index}: timestamp {t} precedes previous sample at {previous}")
        self.index = index


class NegativeSampleError(ValueError):
    def __init__(self, index: int, lux: float):
        super().__init__(f"sample {index}: lux must be >= 0, got {lux}")
        self.index = index


@dataclass(frozen=True)
class ImaState:
    """One inertial moving average; ``alpha`` is the inertia."""

    value: float
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def ima_update(state: ImaState, sample: float) -> ImaState:
    if not sample >= 0:
        raise ValueError(f"sample must be >= 0, got {sample}")
    return ImaState(state.value * state.alpha + (1.0 - state.alpha) * sample, state.alpha)


@dataclass(frozen=True)
class DetectorConfig:
    alpha_baseline: float = 0.9995
    alpha_instant: float = 0.85
    trigger_ratio: float = 2.0
    release_ratio: float = 1.3
    holdoff: float = 5.0  # s
    max_continuous_active: float = 30.0  # s
    sensor_min: float = SENSOR_MIN_LUX
    sensor_max: float = SENSOR_MAX_LUX
    clamp: bool = True

    def __post_init__(self):
        for name in ("alpha_baseline", "alpha_instant"):
            a = getattr(self, name)
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {a}")
        if not self.alpha_baseline > self.alpha_instant:
            raise ValueError("alpha_baseline must exceed alpha_instant")
        if not self.trigger_ratio > 1.0:
            raise ValueError("trigger_ratio must be > 1")
        if not 1.0 < self.release_ratio < self.trigger_ratio:
            raise ValueError("release_ratio must be in (1, trigger_ratio)")
        if not 0.0 < self.sensor_min < self.sensor_max:
            raise ValueError("need 0 < sensor_min < sensor_max")
        if self.holdoff < 0:
            raise ValueError("holdoff must be >= 0")
        if self.max_continuous_active < 0:
            raise ValueError("max_continuous_active must be >= 0")

    @property
    def ratio_floor(self) -> float:
        # with clamping off only guard against a zero baseline
        return self.sensor_min if self.clamp else sys.float_info.min

    def params(self) -> tuple:
        return (self.alpha_baseline, self.alpha_instant, self.trigger_ratio,
                self.release_ratio, self.holdoff, self.max_continuous_active,
                self.sensor_min, self.sensor_max, 1.0 if self.clamp else 0.0,
                self.ratio_floor)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DetectorConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown detector fields {sorted(unknown)}")
        kwargs = {}
        for key, value in doc.items():
            if key == "clamp":
                if not isinstance(value, bool):
                    raise ValueError(f"clamp must be true or false, got {value!r}")
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{key} must be a number, got {value!r}")
            else:
                value = float(value)
            kwargs[key] = value
        return cls(**kwargs)


def clamp_to_sensor_range(lux_in: float, config: DetectorConfig | None = None) -> float:
    config = config or DetectorConfig()
    return min(max(lux_in, config.sensor_min), config.sensor_max)


@dataclass(frozen=True)
class ChannelState:
    baseline: ImaState
    instant: ImaState
    active_since: float | None = None
    suppressed: bool = False
    last_trigger_t: float | None = None
    last_t: float | None = None

    def ratio(self, config: DetectorConfig) -> float:
        return self.instant.value / max(self.baseline.value, config.ratio_floor)

    def to_array(self) -> np.ndarray:
        def nan(v):
            return math.nan if v is None else v
        return np.array([self.baseline.value, self.instant.value, nan(self.active_since),
                         1.0 if self.suppressed else 0.0, nan(self.last_trigger_t),
                         nan(self.last_t)], dtype=np.float64)

    @classmethod
    def from_array(cls, arr, config: DetectorConfig) -> "ChannelState":
        def opt(v):
            return None if math.isnan(v) else float(v)
        return cls(ImaState(float(arr[0]), config.alpha_baseline),
                   ImaState(float(arr[1]), config.alpha_instant),
                   opt(arr[2]), bool(arr[3]), opt(arr[4]), opt(arr[5]))


@dataclass(frozen=True)
class DetectorState:
    a: ChannelState
    b: ChannelState

    def channel(self, name: str) -> ChannelState:
        return self.a if name == "a" else self.b

    def replace(self, name: str, ch: ChannelState) -> "DetectorState":
        return dataclasses.replace(self, **{name: ch})


@dataclass(frozen=True)
class DetectionEvent:
    t: float
    channel: str
    ratio_at_trigger: float
    instant_lux: float
    baseline_lux: float


@dataclass(frozen=True)
class SuppressionChange:
    t: float
    channel: str
    suppressed: bool


@dataclass
class DetectorRun:
    events: list[DetectionEvent]
    state: DetectorState
    suppression: list[SuppressionChange]


def _seed_channel(config: DetectorConfig, lux: float) -> ChannelState:
    if not lux >= 0:
        raise ValueError(f"first_sample must be >= 0, got {lux}")
    v = clamp_to_sensor_range(lux, config) if config.clamp else float(lux)
    return ChannelState(ImaState(v, config.alpha_baseline), ImaState(v, config.alpha_instant))


def init(config: DetectorConfig, first_sample: float | Mapping[str, float]) -> DetectorState:
    """Seed both IMAs so the first ratio is exactly 1.

    ``first_sample`` is either one reading used for both channels or a
    mapping ``{"a": lux, "b": lux}`` seeding each channel separately.
    """
    if isinstance(first_sample, Mapping):
        return DetectorState(_seed_channel(config, first_sample["a"]),
                             _seed_channel(config, first_sample["b"]))
    ch = _seed_channel(config, first_sample)
    return DetectorState(ch, ch)


def _backend(name):
    if name is None:
        return BACKENDS[BACKEND]
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def _raise_kernel_error(code, index, t, lux, previous):
    if code == _core_py.ERR_NEGATIVE:
        raise NegativeSampleError(index, lux)
    raise TraceOrderError(index, t, previous)


def step(state: DetectorState, sample: TraceSample, config: DetectorConfig, *,
         backend: str | None = None):
    """Advance one channel by one sample; returns ``(new_state, event_or_None)``."""
    ch = state.channel(sample.channel)
    arr = ch.to_array()
    out = _backend(backend).run_channel(np.array([sample.t], dtype=np.float64),
                                        np.array([sample.lux], dtype=np.float64),
                                        config.params(), arr)
    ev_idx, ev_ratio, ev_inst, ev_base, _, _, err_idx, err_code = out
    if err_idx >= 0:
        _raise_kernel_error(err_code, 0, sample.t, sample.lux, ch.last_t)
    new_state = state.replace(sample.channel, ChannelState.from_array(arr, config))
    event = None
    if len(ev_idx):
        event = DetectionEvent(sample.t, sample.channel, float(ev_ratio[0]),
                               float(ev_inst[0]), float(ev_base[0]))
    return new_state, event


def _first_per_channel(trace: Trace) -> dict[str, float]:
    first = {}
    for k, name in enumerate(CHANNELS):
        hits = np.flatnonzero(trace.channel == k)
        if len(hits):
            first[name] = float(trace.lux[hits[0]])
    if not first:
        raise ValueError("cannot initialise a detector from an empty trace")
    # a silent channel borrows the other's first reading
    for name in CHANNELS:
        first.setdefault(name, next(iter(first.values())))
    return first


def process_trace(trace: Trace, config: DetectorConfig, state: DetectorState | None = None,
                  *, backend: str | None = None) -> DetectorRun:
    """Run the detector over a whole trace, both channels.

    Without ``state`` each channel is seeded from its own first reading.
    Events come back in trace order, identical to stepping sample by sample.
    """
    kernel = _backend(backend)
    if state is None:
        state = init(config, _first_per_channel(trace))
    params = config.params()
    tagged = []  # (global index, event)
    suppression = []
    errors = []
    for k, name in enumerate(CHANNELS):
        idx = np.flatnonzero(trace.channel == k)
        ch = state.channel(name)
        arr = ch.to_array()
        t = np.ascontiguousarray(trace.t[idx])
        lux = np.ascontiguousarray(trace.lux[idx])
        ev_idx, ev_ratio, ev_inst, ev_base, sup_idx, sup_on, err_idx, err_code = \
            kernel.run_channel(t, lux, params, arr)
        if err_idx >= 0:
            errors.append((int(idx[err_idx]), err_code, float(t[err_idx]),
                           float(lux[err_idx]), float(arr[5])))
        for j, r, iv, bv in zip(ev_idx.tolist(), ev_ratio.tolist(), ev_inst.tolist(),
                                ev_base.tolist()):
            tagged.append((int(idx[j]), DetectionEvent(float(t[j]), name, r, iv, bv)))
        suppression.extend((int(idx[j]), SuppressionChange(float(t[j]), name, bool(on)))
                           for j, on in zip(sup_idx.tolist(), sup_on.tolist()))
        state = state.replace(name, ChannelState.from_array(arr, config))
    if errors:
        index, code, t_bad, lux_bad, prev = min(errors)
        _raise_kernel_error(code, index, t_bad, lux_bad, prev)
    tagged.sort(key=lambda p: p[0])
    suppression.sort(key=lambda p: p[0])
    return DetectorRun([e for _, e in tagged], state, [s for _, s in suppression])


def run_trace(trace: Trace, config: DetectorConfig, state: DetectorState | None = None,
              *, backend: str | None = None) -> list[DetectionEvent]:
    return process_trace(trace, config, state, backend=backend).events
