"""Scenario documents: road geometry, ambient light, vehicles, duration, seed."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .photometry import AmbientModel, RoadGeometry, VehicleSpec


class InputError(ValueError):
    """Malformed user input; ``where`` names the file and field or row."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass(frozen=True)
class ScenarioSpec:
    geometry: RoadGeometry = field(default_factory=RoadGeometry)
    ambient: AmbientModel = field(default_factory=AmbientModel)
    vehicles: tuple[VehicleSpec, ...] = ()
    duration: float = 60.0
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        if not self.duration > 0:
            raise ValueError("duration_s must be > 0")
        for i, v in enumerate(self.vehicles):
            if not 0 <= v.lane_index < self.geometry.num_lanes:
                raise ValueError(
                    f"vehicles[{i}].lane_index {v.lane_index} is off the road "
                    f"({self.geometry.num_lanes} lanes)")
            if v.passby_time > self.duration:
                raise ValueError(
                    f"vehicles[{i}] passes the device at {v.passby_time:.3f} s, "
                    f"after duration_s={self.duration}")

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return dataclasses.replace(self, seed=seed)


def _build(kind, data, where: str, rename: dict[str, str] | None = None):
    if not isinstance(data, dict):
        raise InputError("expected an object", where)
    rename = rename or {}
    names = {f.name for f in dataclasses.fields(kind)}
    kwargs = {}
    for key, value in data.items():
        name = rename.get(key, key)
        if name not in names:
            raise InputError(f"unknown field {key!r}", where)
        kwargs[name] = value
    try:
        return kind(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc), where) from None


def _vehicle(data, where: str) -> VehicleSpec:
    if not isinstance(data, dict):
        raise InputError("expected an object", where)
    data = dict(data)
    cls = data.pop("class", data.pop("vehicle_class", None))
    if cls is None:
        raise InputError("missing field 'class'", where)
    try:
        return VehicleSpec.of_class(cls, **data)
    except TypeError as exc:
        raise InputError(str(exc), where) from None
    except ValueError as exc:
        msg = str(exc)
        field_name = msg.split()[0].rstrip(":")
        raise InputError(msg, f"{where}.{field_name}") from None


def scenario_from_dict(doc: dict, source: str = "<scenario>") -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise InputError("scenario must be a JSON object", source)
    unknown = set(doc) - {"geometry", "ambient", "vehicles", "duration_s", "seed", "name"}
    if unknown:
        raise InputError(f"unknown top-level keys {sorted(unknown)}", source)
    geometry = _build(RoadGeometry, doc.get("geometry", {}), f"{source}:geometry")
    ambient = _build(AmbientModel, doc.get("ambient", {}), f"{source}:ambient")
    raw_vehicles = doc.get("vehicles", [])
    if not isinstance(raw_vehicles, list):
        raise InputError("expected a list", f"{source}:vehicles")
    vehicles = [_vehicle(v, f"{source}:vehicles[{i}]") for i, v in enumerate(raw_vehicles)]
    if "duration_s" not in doc:
        raise InputError("missing field 'duration_s'", source)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InputError("seed must be a non-negative integer", f"{source}:seed")
    try:
        return ScenarioSpec(geometry, ambient, tuple(vehicles), float(doc["duration_s"]),
                            seed, str(doc.get("name", "")))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc), source) from None


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    vehicles = []
    for v in spec.vehicles:
        d = dataclasses.asdict(v)
        d["class"] = d.pop("vehicle_class")
        vehicles.append(d)
    doc = {
        "geometry": dataclasses.asdict(spec.geometry),
        "ambient": dataclasses.asdict(spec.ambient),
        "vehicles": vehicles,
        "duration_s": spec.duration,
        "seed": spec.seed,
    }
    if spec.name:
        doc["name"] = spec.name
    return doc


def load_json(path, what: str = "document"):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what}: {exc.strerror}", str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                         str(path)) from None


def load_scenario(path) -> ScenarioSpec:
    return scenario_from_dict(load_json(path, "scenario"), str(path))
