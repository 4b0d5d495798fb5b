"""Conflict-instance files.

JSON documents with the fixed top-level keys ``resolution_period_s``,
``separation_nm``, ``safety_margin_nm``, ``discretisation`` and ``aircraft``.
Unknown keys are rejected at every level so typos fail loudly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from .errors import InstanceFormatError
from .model import (
    AircraftSpec,
    AircraftState,
    ConflictInstance,
    DiscretisationParams,
    FuelCategory,
    PerformanceEnvelope,
    SeparationParams,
)

_TOP_KEYS = {
    "resolution_period_s",
    "separation_nm",
    "safety_margin_nm",
    "discretisation",
    "aircraft",
}
_DISC_KEYS = {"segments", "max_manoeuvres", "granularity"}
_AIRCRAFT_KEYS = {"id", "initial", "final", "perf"}
_STATE_KEYS = {"x", "y", "heading", "speed"}
_PERF_KEYS = {
    "v_min",
    "v_max",
    "a_max",
    "max_heading_change_per_order",
    "fuel_category",
    "nominal_speed",
    "nominal_burn",
}


def _require_keys(obj: Mapping, expected: set, where: str) -> None:
    if not isinstance(obj, Mapping):
        raise InstanceFormatError(f"{where} must be an object")
    unknown = set(obj) - expected
    if unknown:
        raise InstanceFormatError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = expected - set(obj)
    if missing:
        raise InstanceFormatError(f"missing keys in {where}: {sorted(missing)}")


def _state(obj: Mapping, where: str) -> AircraftState:
    _require_keys(obj, _STATE_KEYS, where)
    return AircraftState(
        x=float(obj["x"]), y=float(obj["y"]),
        heading=float(obj["heading"]), speed=float(obj["speed"]),
    )


def _perf(obj: Mapping, where: str) -> PerformanceEnvelope:
    _require_keys(obj, _PERF_KEYS, where)
    try:
        category = FuelCategory(obj["fuel_category"])
    except ValueError:
        raise InstanceFormatError(
            f"{where}.fuel_category must be one of LIGHT/MEDIUM/HEAVY"
        ) from None
    return PerformanceEnvelope(
        v_min=float(obj["v_min"]),
        v_max=float(obj["v_max"]),
        a_max=float(obj["a_max"]),
        max_heading_change_per_order=float(obj["max_heading_change_per_order"]),
        fuel_category=category,
        nominal_speed=float(obj["nominal_speed"]),
        nominal_burn=float(obj["nominal_burn"]),
    )


def load_instance(path: Path | str) -> ConflictInstance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    _require_keys(doc, _TOP_KEYS, "instance")
    disc = doc["discretisation"]
    _require_keys(disc, _DISC_KEYS, "discretisation")
    if not isinstance(doc["aircraft"], list) or not doc["aircraft"]:
        raise InstanceFormatError("aircraft must be a non-empty list")

    aircraft = []
    for idx, entry in enumerate(doc["aircraft"]):
        where = f"aircraft[{idx}]"
        _require_keys(entry, _AIRCRAFT_KEYS, where)
        aircraft.append(
            AircraftSpec(
                id=int(entry["id"]),
                initial=_state(entry["initial"], f"{where}.initial"),
                final=_state(entry["final"], f"{where}.final"),
                perf=_perf(entry["perf"], f"{where}.perf"),
            )
        )
    return ConflictInstance(
        aircraft=tuple(aircraft),
        resolution_period_s=float(doc["resolution_period_s"]),
        separation=SeparationParams(
            min_horizontal=float(doc["separation_nm"]),
            safety_margin=float(doc["safety_margin_nm"]),
        ),
        discretisation=DiscretisationParams(
            segments=int(disc["segments"]),
            max_manoeuvres=int(disc["max_manoeuvres"]),
            granularity=int(disc["granularity"]),
        ),
    )


def save_instance(inst: ConflictInstance, path: Path | str) -> Path:
    doc = {
        "resolution_period_s": inst.resolution_period_s,
        "separation_nm": inst.separation.min_horizontal,
        "safety_margin_nm": inst.separation.safety_margin,
        "discretisation": {
            "segments": inst.discretisation.segments,
            "max_manoeuvres": inst.discretisation.max_manoeuvres,
            "granularity": inst.discretisation.granularity,
        },
        "aircraft": [
            {
                "id": ac.id,
                "initial": {
                    "x": ac.initial.x, "y": ac.initial.y,
                    "heading": ac.initial.heading, "speed": ac.initial.speed,
                },
                "final": {
                    "x": ac.final.x, "y": ac.final.y,
                    "heading": ac.final.heading, "speed": ac.final.speed,
                },
                "perf": {
                    "v_min": ac.perf.v_min,
                    "v_max": ac.perf.v_max,
                    "a_max": ac.perf.a_max,
                    "max_heading_change_per_order": ac.perf.max_heading_change_per_order,
                    "fuel_category": ac.perf.fuel_category.value,
                    "nominal_speed": ac.perf.nominal_speed,
                    "nominal_burn": ac.perf.nominal_burn,
                },
            }
            for ac in inst.aircraft
        ],
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path
