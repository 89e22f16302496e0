"""Headlight photometry and ambient-light-sensor trace synthesis.

The device sits beside the road with two ambient light sensors, channel ``a``
looking one way down the road and channel ``b`` the other. A vehicle's
headlights are a point source at the headlight midpoint; the illuminance on
the sensor follows the inverse-square law with a cosine-power beam profile
cut off at the beam half-angle.

Coordinates (all in feet): ``x`` runs along the road and is the signed
distance of the vehicle from the device (positive while approaching), ``y``
runs across the road from the device-side edge, ``z`` is height above the
road surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

FT_TO_M = 0.3048
MPH_TO_FPS = 22.0 / 15.0

CHANNELS = ("a", "b")
DIRECTIONS = ("toward_channel_a", "toward_channel_b")
VEHICLE_CLASSES = ("sedan_led", "sedan_incandescent", "suv", "bus", "semi")

# Per-class headlight defaults. Intensities are calibrated against the
# detector defaults so that LED sedans at 45 mph trigger near 225 ft on the
# standard suite and incandescent cars about a quarter closer than that.
CLASS_DEFAULTS: dict[str, dict[str, float]] = {
    "sedan_led": dict(luminous_intensity=560.0, headlight_height=2.2,
                      beam_half_angle=30.0, beam_falloff_exponent=4.0, speed=45.0),
    "sedan_incandescent": dict(luminous_intensity=300.0, headlight_height=2.2,
                               beam_half_angle=30.0, beam_falloff_exponent=4.0, speed=45.0),
    "suv": dict(luminous_intensity=610.0, headlight_height=2.8,
                beam_half_angle=30.0, beam_falloff_exponent=4.0, speed=45.0),
    "bus": dict(luminous_intensity=2000.0, headlight_height=3.6,
                beam_half_angle=25.0, beam_falloff_exponent=3.0, speed=35.0),
    "semi": dict(luminous_intensity=2400.0, headlight_height=4.0,
                 beam_half_angle=25.0, beam_falloff_exponent=3.0, speed=35.0),
}


@dataclass(frozen=True)
class VehicleSpec:
    """One vehicle approaching the device at constant speed.

    ``lane_index`` 0 is the lane nearest the device. ``entry_distance`` is
    the longitudinal distance (ft) from the device when the vehicle appears
    at ``entry_time``; its headlights contribute from then until pass-by.
    """

    vehicle_class: str
    luminous_intensity: float  # cd
    headlight_height: float  # ft
    beam_half_angle: float  # degrees
    beam_falloff_exponent: float
    speed: float  # mph
    lane_index: int
    direction: str
    entry_time: float  # s
    entry_distance: float  # ft

    def __post_init__(self):
        if self.vehicle_class not in VEHICLE_CLASSES:
            raise ValueError(f"class: unknown vehicle class {self.vehicle_class!r}")
        if not self.luminous_intensity > 0:
            raise ValueError("luminous_intensity must be > 0")
        if not self.speed > 0:
            raise ValueError("speed must be > 0")
        if not 0 < self.beam_half_angle < 90:
            raise ValueError("beam_half_angle must be in (0, 90) degrees")
        if not self.entry_distance > 0:
            raise ValueError("entry_distance must be > 0")
        if self.headlight_height < 0:
            raise ValueError("headlight_height must be >= 0")
        if self.beam_falloff_exponent < 0:
            raise ValueError("beam_falloff_exponent must be >= 0")
        if self.entry_time < 0:
            raise ValueError("entry_time must be >= 0")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction: expected one of {DIRECTIONS}, got {self.direction!r}")

    @classmethod
    def of_class(cls, vehicle_class: str, **overrides) -> "VehicleSpec":
        """Build a vehicle from its class defaults, overriding any field."""
        if vehicle_class not in CLASS_DEFAULTS:
            raise ValueError(f"class: unknown vehicle class {vehicle_class!r}")
        fields = dict(CLASS_DEFAULTS[vehicle_class])
        fields.update(lane_index=0, direction="toward_channel_a",
                      entry_time=0.0, entry_distance=1200.0)
        fields.update(overrides)
        return cls(vehicle_class=vehicle_class, **fields)

    @property
    def speed_fps(self) -> float:
        return self.speed * MPH_TO_FPS

    @property
    def channel(self) -> str:
        return "a" if self.direction == "toward_channel_a" else "b"

    @property
    def passby_time(self) -> float:
        return self.entry_time + self.entry_distance / self.speed_fps

    def position(self, t):
        """Signed longitudinal distance (ft) at time ``t``; positive while approaching."""
        return self.entry_distance - self.speed_fps * (np.asarray(t, dtype=float) - self.entry_time)


@dataclass(frozen=True)
class RoadGeometry:
    num_lanes: int = 4
    lane_width: float = 12.0  # ft
    divider_height: float = 0.0  # ft, 0 = no divider
    divider_position: int = 2  # lane boundary index
    device_lateral_offset: float = 6.0  # ft from the device-side road edge
    device_height: float = 3.5  # ft

    def __post_init__(self):
        if self.num_lanes < 1:
            raise ValueError("num_lanes must be >= 1")
        if not self.lane_width > 0:
            raise ValueError("lane_width must be > 0")
        if not self.device_height > 0:
            raise ValueError("device_height must be > 0")
        if self.divider_height < 0:
            raise ValueError("divider_height must be >= 0")
        if not 0 <= self.divider_position <= self.num_lanes:
            raise ValueError("divider_position must be a lane boundary index in [0, num_lanes]")
        if self.device_lateral_offset < 0:
            raise ValueError("device_lateral_offset must be >= 0")

    def lane_center(self, lane_index: int) -> float:
        return (lane_index + 0.5) * self.lane_width

    def occluded(self, lane_index: int, headlight_height: float) -> bool:
        """True if the divider blocks the line of sight from a lane to the sensor.

        The divider runs parallel to the road, so the sight line is blocked
        when its height where it crosses the divider plane is below the top.
        """
        if self.divider_height <= 0:
            return False
        y_div = self.divider_position * self.lane_width
        y_dev = -self.device_lateral_offset
        y_car = self.lane_center(lane_index)
        if not y_dev < y_div < y_car:
            return False
        frac = (y_div - y_dev) / (y_car - y_dev)
        z = self.device_height + (headlight_height - self.device_height) * frac
        return z < self.divider_height


@dataclass(frozen=True)
class AmbientModel:
    base_night_lux: float = 0.05
    streetlight_contribution: float = 0.0
    multiplicative_noise_sigma: float = 0.05
    sample_rate: float = 20.0  # Hz

    def __post_init__(self):
        if self.base_night_lux < 0:
            raise ValueError("base_night_lux must be >= 0")
        if self.streetlight_contribution < 0:
            raise ValueError("streetlight_contribution must be >= 0")
        if self.multiplicative_noise_sigma < 0:
            raise ValueError("multiplicative_noise_sigma must be >= 0")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")

    @property
    def level(self) -> float:
        return self.base_night_lux + self.streetlight_contribution


@dataclass(frozen=True)
class TraceSample:
    t: float
    channel: str
    lux: float


@dataclass
class Trace:
    """Interleaved two-channel sensor trace stored column-wise."""

    t: np.ndarray
    channel: np.ndarray  # int8, 0 = a, 1 = b
    lux: np.ndarray
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.channel = np.asarray(self.channel, dtype=np.int8)
        self.lux = np.asarray(self.lux, dtype=np.float64)
        if not (self.t.shape == self.channel.shape == self.lux.shape):
            raise ValueError("trace columns must have equal length")

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[TraceSample]:
        return self.samples()

    def samples(self) -> Iterator[TraceSample]:
        for t, c, x in zip(self.t.tolist(), self.channel.tolist(), self.lux.tolist()):
            yield TraceSample(t, CHANNELS[c], x)

    def channel_lux(self, channel: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.channel == CHANNELS.index(channel)
        return self.t[mask], self.lux[mask]

    def scaled(self, k: float) -> "Trace":
        return Trace(self.t.copy(), self.channel.copy(), self.lux * k, self.seed)

    def __getitem__(self, sl: slice) -> "Trace":
        return Trace(self.t[sl], self.channel[sl], self.lux[sl], self.seed)

    @classmethod
    def from_samples(cls, samples) -> "Trace":
        samples = list(samples)
        return cls(
            np.array([s.t for s in samples], dtype=np.float64),
            np.array([CHANNELS.index(s.channel) for s in samples], dtype=np.int8),
            np.array([s.lux for s in samples], dtype=np.float64),
        )


def _beam_illuminance(vehicle: VehicleSpec, x_ft, geometry: RoadGeometry) -> np.ndarray:
    x_ft = np.asarray(x_ft, dtype=np.float64)
    out = np.zeros_like(x_ft)
    if geometry.occluded(vehicle.lane_index, vehicle.headlight_height):
        return out
    dy = geometry.lane_center(vehicle.lane_index) + geometry.device_lateral_offset
    dz = geometry.device_height - vehicle.headlight_height
    ahead = x_ft > 0
    x = x_ft[ahead]
    d_ft = np.sqrt(x * x + (dy * dy + dz * dz))
    cos_theta = x / d_ft
    in_beam = cos_theta >= math.cos(math.radians(vehicle.beam_half_angle))
    d_m = d_ft * FT_TO_M
    e = vehicle.luminous_intensity * cos_theta ** vehicle.beam_falloff_exponent / (d_m * d_m)
    out[ahead] = np.where(in_beam, e, 0.0)
    return out


def illuminance_at(vehicle: VehicleSpec, vehicle_distance: float, geometry: RoadGeometry) -> float:
    """Illuminance (lux) on the sensor from one vehicle's headlights.

    ``vehicle_distance`` is the longitudinal distance in feet; the
    straight-line distance also accounts for lane offset and height.
    Beams point along the road, so the off-axis angle shrinks with distance.
    """
    if not vehicle_distance > 0:
        raise ValueError(f"vehicle_distance must be > 0, got {vehicle_distance}")
    return float(_beam_illuminance(vehicle, np.array([vehicle_distance]), geometry)[0])


def ambient_lux(model: AmbientModel, t: float, rng: np.random.Generator) -> float:
    """One noisy ambient reading; the lognormal factor has unit mean."""
    if t < 0:
        raise ValueError("t must be >= 0")
    s = model.multiplicative_noise_sigma
    if s == 0:
        return model.level
    return model.level * math.exp(s * rng.standard_normal() - 0.5 * s * s)


def sample_times(duration: float, sample_rate: float) -> np.ndarray:
    n = int(math.floor(duration * sample_rate + 1e-9)) + 1
    return np.arange(n, dtype=np.float64) / sample_rate


def headlight_lux(vehicles, geometry: RoadGeometry, t: np.ndarray) -> dict[str, np.ndarray]:
    """Summed headlight illuminance per channel at times ``t``, without ambient."""
    out = {c: np.zeros_like(t) for c in CHANNELS}
    for v in vehicles:
        if not 0 <= v.lane_index < geometry.num_lanes:
            raise ValueError(
                f"lane_index {v.lane_index} is off the road ({geometry.num_lanes} lanes)")
        x = np.where(t >= v.entry_time, v.position(t), 0.0)
        out[v.channel] += _beam_illuminance(v, x, geometry)
    return out


def scenario_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for sensor noise and deterrent sound choice."""
    noise, deterrent = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(noise), np.random.default_rng(deterrent)


def synthesize_trace(scenario, seed: int | None = None) -> Trace:
    """Sample both sensor channels over the scenario's duration.

    Each channel sees the shared ambient level with its own noise draw plus
    the headlights of vehicles approaching from the direction it faces.
    Samples are interleaved ``a, b`` per instant.
    """
    if seed is None:
        seed = scenario.seed
    amb = scenario.ambient
    if not scenario.duration > 0:
        raise ValueError("duration must be > 0")
    t = sample_times(scenario.duration, amb.sample_rate)
    heads = headlight_lux(scenario.vehicles, scenario.geometry, t)
    noise_rng, _ = scenario_rngs(seed)
    s = amb.multiplicative_noise_sigma
    n = len(t)
    lux = np.empty(2 * n)
    for k, c in enumerate(CHANNELS):
        if s > 0:
            factor = np.exp(s * noise_rng.standard_normal(n) - 0.5 * s * s)
            ambient = amb.level * factor
        else:
            ambient = np.full(n, amb.level)
        lux[k::2] = ambient + heads[c]
    return Trace(np.repeat(t, 2), np.tile(np.array([0, 1], dtype=np.int8), n), lux, seed)
