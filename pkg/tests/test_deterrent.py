import numpy as np
import pytest

from roadwarn.deterrent import (DEER_BAND_NM, DeterrentEvent, Sound, SoundPool, VisualConfig,
                                active_windows, on_detection, schedule, select_sound)
from roadwarn.detector import DetectionEvent


def pool_of(n):
    return SoundPool([Sound(f"s{k}", 1.0 + k) for k in range(n)])


def event(t):
    return DetectionEvent(t, "a", 2.5, 0.2, 0.08)


def test_singleton_pool_always_plays_its_sound(rng):
    pool = SoundPool([Sound("wolf_howl", 3.0)])
    assert {select_sound(pool, rng) for _ in range(50)} == {"wolf_howl"}


def test_no_consecutive_repeats(rng):
    pool = pool_of(3)
    draws = [select_sound(pool, rng) for _ in range(10_000)]
    assert all(a != b for a, b in zip(draws, draws[1:]))
    assert pool.last_played == draws[-1]


def test_conditional_frequencies_are_uniform():
    rng = np.random.default_rng(2021)
    pool = pool_of(4)
    draws = [select_sound(pool, rng) for _ in range(100_000)]
    ids = pool.ids
    pairs = np.zeros((4, 4))
    for a, b in zip(draws, draws[1:]):
        pairs[ids.index(a), ids.index(b)] += 1
    cond = pairs / pairs.sum(axis=1, keepdims=True)
    for i in range(4):
        others = [cond[i, j] for j in range(4) if j != i]
        assert cond[i, i] == 0
        assert max(abs(f - 1 / 3) for f in others) <= 0.01


def test_plain_uniform_when_exclusion_disabled():
    rng = np.random.default_rng(3)
    pool = pool_of(2)
    pool.no_repeat = False
    draws = [select_sound(pool, rng) for _ in range(2000)]
    assert any(a == b for a, b in zip(draws, draws[1:]))


def test_selection_is_seed_deterministic():
    def draws(seed):
        pool, rng = pool_of(4), np.random.default_rng(seed)
        return [select_sound(pool, rng) for _ in range(50)]
    assert draws(8) == draws(8)
    assert draws(8) != draws(9)


def test_pool_validation():
    with pytest.raises(ValueError, match="empty"):
        SoundPool([])
    with pytest.raises(ValueError, match="unique"):
        SoundPool([Sound("x", 1.0), Sound("x", 2.0)])
    with pytest.raises(ValueError, match="duration"):
        SoundPool([Sound("x", 0.0)])
    pool = pool_of(2)
    pool.sounds.clear()
    with pytest.raises(ValueError, match="empty"):
        select_sound(pool, np.random.default_rng(0))


def test_detection_maps_to_deterrent(rng):
    pool = SoundPool.default()
    d = on_detection(event(12.5), pool, VisualConfig(), rng)
    assert d.t == 12.5
    assert d.sound_id in pool.ids
    assert d.wavelength == 520.0
    assert DEER_BAND_NM[0] <= d.wavelength <= DEER_BAND_NM[1]
    assert d.duration == pool.get(d.sound_id).duration
    fixed = on_detection(event(1.0), pool, VisualConfig(duration=4.0), rng)
    assert fixed.duration == 4.0


def test_schedule_replays_identically():
    events = [event(1.0), event(9.0)]
    a = schedule(events, SoundPool.default(), VisualConfig(), np.random.default_rng(5))
    b = schedule(events, SoundPool.default(), VisualConfig(), np.random.default_rng(5))
    assert a == b and a[0].sound_id != a[1].sound_id


def test_overlapping_deterrents_merge():
    ds = [DeterrentEvent(0.0, "a", 520, 2, 3.0), DeterrentEvent(2.0, "b", 520, 2, 3.0),
          DeterrentEvent(10.0, "a", 520, 2, 1.0)]
    w = active_windows(ds)
    assert [(x.start, x.end, x.sounds) for x in w] == [(0.0, 5.0, ["a", "b"]), (10.0, 11.0, ["a"])]


def test_manifest_roundtrip():
    pool = SoundPool.default()
    again = SoundPool.from_manifest(pool.to_manifest())
    assert again.sounds == pool.sounds and again.no_repeat
    with pytest.raises(ValueError, match=r"sounds\[0\]"):
        SoundPool.from_manifest({"sounds": [{"id": "x"}]})


def test_visual_validation():
    with pytest.raises(ValueError):
        VisualConfig(blink_rate=0.0)
