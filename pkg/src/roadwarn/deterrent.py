"""Audio-visual deterrent scheduling.

Each detection plays a randomly chosen sound while the warning light blinks.
To keep animals from habituating to any one sound, selection is uniform over
the pool excluding the sound played last.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# deer are most sensitive between these wavelengths (nm)
DEER_BAND_NM = (450.0, 542.0)

DEFAULT_SOUNDS = (
    ("wolf_howl", "wolf_howl.wav", 3.0),
    ("coyote_yip", "coyote_yip.wav", 2.5),
    ("dog_bark", "dog_bark.wav", 2.0),
    ("predator_growl", "predator_growl.wav", 2.5),
)


@dataclass(frozen=True)
class Sound:
    id: str
    duration: float  # s
    file: str = ""


@dataclass
class SoundPool:
    """Sounds available on the SD card plus the id played most recently."""

    sounds: list[Sound]
    last_played: str | None = None
    no_repeat: bool = True

    def __post_init__(self):
        self.sounds = list(self.sounds)
        if not self.sounds:
            raise ValueError("sound pool is empty")
        ids = [s.id for s in self.sounds]
        if len(set(ids)) != len(ids):
            raise ValueError("sound ids must be unique")
        for s in self.sounds:
            if not s.duration > 0:
                raise ValueError(f"sound {s.id!r}: duration must be > 0")
        if self.last_played is not None and self.last_played not in ids:
            raise ValueError(f"last_played {self.last_played!r} is not in the pool")

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.sounds]

    def get(self, sound_id: str) -> Sound:
        for s in self.sounds:
            if s.id == sound_id:
                return s
        raise KeyError(sound_id)

    @classmethod
    def default(cls) -> "SoundPool":
        return cls([Sound(i, d, f) for i, f, d in DEFAULT_SOUNDS])

    @classmethod
    def from_manifest(cls, doc: dict) -> "SoundPool":
        """Parse ``{"sounds": [{"id", "file", "duration_s"}, ...], "no_repeat": bool}``."""
        if not isinstance(doc, dict) or not isinstance(doc.get("sounds"), list):
            raise ValueError("sound manifest needs a 'sounds' list")
        sounds = []
        for k, entry in enumerate(doc["sounds"]):
            try:
                sounds.append(Sound(str(entry["id"]), float(entry["duration_s"]),
                                    str(entry.get("file", ""))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"sounds[{k}]: {exc}") from None
        return cls(sounds, no_repeat=bool(doc.get("no_repeat", True)))

    def to_manifest(self) -> dict:
        return {"sounds": [{"id": s.id, "file": s.file, "duration_s": s.duration}
                           for s in self.sounds],
                "no_repeat": self.no_repeat}


@dataclass(frozen=True)
class VisualConfig:
    wavelength: float = 520.0  # nm, green
    blink_rate: float = 2.0  # Hz
    duration: float | None = None  # s; None = length of the chosen sound

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")
        if not self.blink_rate > 0:
            raise ValueError("blink_rate must be > 0")
        if self.duration is not None and not self.duration > 0:
            raise ValueError("duration must be > 0")


@dataclass(frozen=True)
class DeterrentEvent:
    t: float
    sound_id: str
    wavelength: float
    blink_rate: float
    duration: float

    @property
    def end(self) -> float:
        return self.t + self.duration


def select_sound(pool: SoundPool, rng: np.random.Generator) -> str:
    """Pick the next sound and record it as ``pool.last_played``."""
    ids = pool.ids
    if not ids:
        raise ValueError("sound pool is empty")
    if pool.no_repeat and len(ids) > 1 and pool.last_played is not None:
        ids = [i for i in ids if i != pool.last_played]
    choice = ids[int(rng.integers(len(ids)))]
    pool.last_played = choice
    return choice


def on_detection(event, pool: SoundPool, visual: VisualConfig,
                 rng: np.random.Generator) -> DeterrentEvent:
    sound_id = select_sound(pool, rng)
    duration = visual.duration if visual.duration is not None else pool.get(sound_id).duration
    return DeterrentEvent(event.t, sound_id, visual.wavelength, visual.blink_rate, duration)


def schedule(events, pool: SoundPool, visual: VisualConfig,
             rng: np.random.Generator) -> list[DeterrentEvent]:
    return [on_detection(e, pool, visual, rng) for e in events]


@dataclass
class ActiveWindow:
    start: float
    end: float
    sounds: list[str] = field(default_factory=list)


def active_windows(deterrents) -> list[ActiveWindow]:
    """Merge overlapping deterrents; a detection during an active one extends it."""
    windows: list[ActiveWindow] = []
    for d in sorted(deterrents, key=lambda d: d.t):
        if windows and d.t <= windows[-1].end:
            windows[-1].end = max(windows[-1].end, d.end)
            windows[-1].sounds.append(d.sound_id)
        else:
            windows.append(ActiveWindow(d.t, d.end, [d.sound_id]))
    return windows
