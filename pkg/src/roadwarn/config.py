"""Run configuration documents and dotted-key overrides.

A config document is JSON with three optional sections::

    {
      "detector":   {"alpha_baseline": 0.9995, "trigger_ratio": 2.0, ...},
      "deterrent":  {"sounds": [{"id": "wolf_howl", "file": "...", "duration_s": 3.0}],
                     "no_repeat": true,
                     "visual": {"wavelength": 520, "blink_rate": 2, "duration": null}},
      "evaluation": {"histogram_bins_ft": [0, 60, ..., 600, null]}
    }

``null`` as the last bin edge stands for infinity. Missing sections and
fields take their defaults.
"""
from __future__ import annotations

import copy
import dataclasses
import json
import math
from dataclasses import dataclass, field

from .detector import DetectorConfig
from .deterrent import SoundPool, VisualConfig
from .evaluation import DEFAULT_BIN_EDGES
from .scenario import InputError, load_json

SECTIONS = ("detector", "deterrent", "evaluation")


@dataclass
class RunConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    pool: SoundPool = field(default_factory=SoundPool.default)
    visual: VisualConfig = field(default_factory=VisualConfig)
    histogram_bins: tuple = DEFAULT_BIN_EDGES

    def to_dict(self) -> dict:
        manifest = self.pool.to_manifest()
        return {
            "detector": self.detector.to_dict(),
            "deterrent": {"sounds": manifest["sounds"], "no_repeat": manifest["no_repeat"],
                          "visual": dataclasses.asdict(self.visual)},
            "evaluation": {"histogram_bins_ft": [None if math.isinf(e) else e
                                                 for e in self.histogram_bins]},
        }


def parse_override(text: str) -> tuple[list[str], object]:
    """``"detector.trigger_ratio=2.5"`` -> (["detector", "trigger_ratio"], 2.5).

    The value is read as JSON when possible, otherwise kept as a string.
    """
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise InputError(f"override {text!r} is not of the form key=value", "--set")
    path = [p for p in key.strip().split(".")]
    if any(not p for p in path):
        raise InputError(f"override key {key!r} has an empty component", "--set")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for text in overrides or ():
        path, value = parse_override(text)
        node = doc
        for part in path[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise InputError(f"cannot set {'.'.join(path)}: {part!r} is not a section",
                                 "--set")
            node = nxt
        node[path[-1]] = value
    return doc


def _section(doc: dict, name: str, source: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise InputError("expected an object", f"{source}:{name}")
    return sec


def config_from_dict(doc, source: str = "<config>") -> RunConfig:
    if not isinstance(doc, dict):
        raise InputError("config must be a JSON object", source)
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise InputError(f"unknown sections {sorted(unknown)}; expected {SECTIONS}", source)

    det = _section(doc, "detector", source)
    try:
        detector = DetectorConfig.from_dict(det)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc), f"{source}:detector") from None

    dsec = _section(doc, "deterrent", source)
    unknown = set(dsec) - {"sounds", "no_repeat", "visual"}
    if unknown:
        raise InputError(f"unknown fields {sorted(unknown)}", f"{source}:deterrent")
    pool = SoundPool.default()
    if "sounds" in dsec:
        try:
            pool = SoundPool.from_manifest({"sounds": dsec["sounds"]})
        except ValueError as exc:
            raise InputError(str(exc), f"{source}:deterrent") from None
    pool.no_repeat = bool(dsec.get("no_repeat", True))
    vis = dsec.get("visual", {})
    if not isinstance(vis, dict):
        raise InputError("expected an object", f"{source}:deterrent.visual")
    unknown = set(vis) - {"wavelength", "blink_rate", "duration"}
    if unknown:
        raise InputError(f"unknown fields {sorted(unknown)}", f"{source}:deterrent.visual")
    try:
        vis = {k: v if v is None or isinstance(v, bool) else float(v) for k, v in vis.items()}
        visual = VisualConfig(**vis)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc), f"{source}:deterrent.visual") from None

    esec = _section(doc, "evaluation", source)
    unknown = set(esec) - {"histogram_bins_ft"}
    if unknown:
        raise InputError(f"unknown fields {sorted(unknown)}", f"{source}:evaluation")
    bins = DEFAULT_BIN_EDGES
    if "histogram_bins_ft" in esec:
        raw = esec["histogram_bins_ft"]
        where = f"{source}:evaluation.histogram_bins_ft"
        if not isinstance(raw, list) or len(raw) < 2:
            raise InputError("expected a list of at least two edges", where)
        try:
            bins = tuple(math.inf if e is None else float(e) for e in raw)
        except (TypeError, ValueError):
            raise InputError("edges must be numbers or null", where) from None
        if any(b <= a for a, b in zip(bins, bins[1:])):
            raise InputError("edges must be strictly increasing", where)
    return RunConfig(detector, pool, visual, bins)


def load_config(path=None, overrides=()) -> RunConfig:
    """Read a config document (or defaults when ``path`` is None) and apply overrides."""
    doc = load_json(path, "config") if path is not None else {}
    source = str(path) if path is not None else "<defaults with --set>"
    return config_from_dict(apply_overrides(doc, overrides), source)
