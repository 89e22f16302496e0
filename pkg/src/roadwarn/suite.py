"""The standard 200-vehicle evaluation suite.

A four-lane 45 mph state highway at night, the device 6 ft off the road edge
at 3.5 ft. Lanes 0-1 carry traffic approaching channel ``a``, lanes 2-3
traffic approaching channel ``b``. The suite has a dark run, a street-lit
run, and a dark run containing a caravan episode: a convoy of trucks that
keeps the sensor bright long enough to saturate the detector, followed by
semis in the farthest lane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .photometry import AmbientModel, RoadGeometry, VehicleSpec
from .scenario import ScenarioSpec

# raw ambient-light-sensor flicker; large enough that low trigger ratios
# produce false positives on their own
NOISE_SIGMA = 0.3

DARK = AmbientModel(base_night_lux=0.05, streetlight_contribution=0.0,
                    multiplicative_noise_sigma=NOISE_SIGMA)
STREET_LIT = AmbientModel(base_night_lux=0.05, streetlight_contribution=0.05,
                          multiplicative_noise_sigma=NOISE_SIGMA)

# 200 vehicles, 14% incandescent
CLASS_MIX = {"sedan_led": 100, "suv": 48, "sedan_incandescent": 28, "bus": 8, "semi": 16}

# per-vehicle headlight intensity spread (log-normal sigma); old incandescent
# lamps vary far more than modern ones
INTENSITY_SPREAD = {"sedan_led": 0.15, "suv": 0.15, "sedan_incandescent": 0.55,
                    "bus": 0.15, "semi": 0.15}


@dataclass(frozen=True)
class CaravanEpisode:
    """A truck convoy followed by semis in the farthest lane of one direction."""

    start: float = 120.0
    convoy: tuple[str, ...] = ("semi", "bus", "semi", "semi", "bus", "semi", "semi")
    convoy_headway: float = 5.0
    convoy_lane: int = 1
    followers: int = 3
    follower_lane: int = 1
    follower_gap: float = 4.0
    follower_headway: float = 3.0
    quiet_after: float = 150.0

    @property
    def size(self) -> int:
        return len(self.convoy) + self.followers


ENTRY_DISTANCE_FT = 1500.0


def _lanes(direction: str) -> tuple[int, int]:
    return (0, 1) if direction == "toward_channel_a" else (2, 3)


def _vehicle(cls: str, rng, *, direction: str, lane: int, entry_time: float) -> VehicleSpec:
    base = VehicleSpec.of_class(cls)
    factor = float(np.exp(INTENSITY_SPREAD[cls] * rng.standard_normal()))
    return VehicleSpec.of_class(cls, luminous_intensity=base.luminous_intensity * factor,
                                lane_index=lane, direction=direction, entry_time=entry_time,
                                entry_distance=ENTRY_DISTANCE_FT)


def random_traffic(classes, rng, *, start: float = 30.0, min_headway: float = 45.0,
                   mean_extra_headway: float = 60.0,
                   directions=("toward_channel_a", "toward_channel_b")) -> list[VehicleSpec]:
    """Isolated approaches with randomized headways per direction."""
    vehicles = []
    clock = {"toward_channel_a": start, "toward_channel_b": start + 7.0}
    for cls in classes:
        direction = directions[int(rng.integers(len(directions)))]
        lane = _lanes(direction)[int(rng.integers(2))]
        vehicles.append(_vehicle(cls, rng, direction=direction, lane=lane,
                                 entry_time=clock[direction]))
        clock[direction] += min_headway + float(rng.exponential(mean_extra_headway))
    return vehicles


def _duration(vehicles, tail: float = 30.0) -> float:
    return float(np.ceil(max(v.passby_time for v in vehicles) + tail))


def caravan_vehicles(episode: CaravanEpisode, rng, direction: str = "toward_channel_a"):
    out = []
    t = episode.start
    for cls in episode.convoy:
        out.append(_vehicle(cls, rng, direction=direction, lane=episode.convoy_lane,
                            entry_time=t))
        t += episode.convoy_headway
    t += episode.follower_gap - episode.convoy_headway
    for _ in range(episode.followers):
        out.append(_vehicle("semi", rng, direction=direction, lane=episode.follower_lane,
                            entry_time=t))
        t += episode.follower_headway
    return out


def standard_suite(seed: int = 2021, episode: CaravanEpisode | None = None,
                   geometry: RoadGeometry | None = None) -> list[ScenarioSpec]:
    """Three scenarios totalling 200 vehicles with the standard class mix."""
    episode = episode or CaravanEpisode()
    geometry = geometry or RoadGeometry()
    rng = np.random.default_rng(seed)
    mix = dict(CLASS_MIX)
    for cls in episode.convoy:
        mix[cls] -= 1
    mix["semi"] -= episode.followers
    pool = [c for c, n in mix.items() for _ in range(n)]
    pool = [pool[k] for k in rng.permutation(len(pool))]
    n_other = len(pool)
    n_dark = (n_other - 20) // 2
    dark_cls, lit_cls, caravan_cls = pool[:n_dark], pool[n_dark:2 * n_dark], pool[2 * n_dark:]

    dark = random_traffic(dark_cls, rng)
    lit = random_traffic(lit_cls, rng)
    caravan = caravan_vehicles(episode, rng)
    # isolated traffic on the other direction during the episode, then both
    # directions after the light has died down
    other = random_traffic(caravan_cls[: len(caravan_cls) // 2], rng, start=30.0,
                           directions=("toward_channel_b",))
    after = episode.start + episode.size * episode.convoy_headway + episode.quiet_after
    after = max([after] + [v.entry_time + 45.0 for v in other])
    later = random_traffic(caravan_cls[len(caravan_cls) // 2:], rng, start=after)
    caravan_all = caravan + other + later
    specs = [
        ScenarioSpec(geometry, DARK, tuple(dark), _duration(dark), seed * 10 + 1, "dark"),
        ScenarioSpec(geometry, STREET_LIT, tuple(lit), _duration(lit), seed * 10 + 2, "street-lit"),
        ScenarioSpec(geometry, DARK, tuple(caravan_all), _duration(caravan_all), seed * 10 + 3,
                     "caravan"),
    ]
    return specs
