"""Domain types and kinematic primitives.

Conventions used throughout the package: positions in nautical miles,
speeds in knots, time in seconds, angles in compass degrees (0 = north,
90 = east, clockwise positive), fuel in kg.  1 kt = 1/3600 NM/s.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError

KT_TO_NM_PER_S = 1.0 / 3600.0

#: Nominal burn rates (kg/s at nominal speed) per performance category.
BURN_BY_CATEGORY = {"LIGHT": 0.02, "MEDIUM": 0.05, "HEAVY": 0.09}


class FuelCategory(Enum):
    LIGHT = "LIGHT"
    MEDIUM = "MEDIUM"
    HEAVY = "HEAVY"

    @property
    def nominal_burn(self) -> float:
        return BURN_BY_CATEGORY[self.value]


def normalize_heading(deg: float) -> float:
    """Wrap an angle into [0, 360)."""
    h = deg % 360.0
    return 0.0 if h == 360.0 else h  # % can round up for tiny negatives


def heading_difference(a: float, b: float) -> float:
    """Smallest signed rotation (degrees, in (-180, 180]) taking heading a to b."""
    d = (b - a) % 360.0
    return d - 360.0 if d > 180.0 else d


def bearing(x0: float, y0: float, x1: float, y1: float) -> float:
    """Compass bearing from (x0, y0) toward (x1, y1)."""
    return normalize_heading(math.degrees(math.atan2(x1 - x0, y1 - y0)))


@dataclass(frozen=True)
class AircraftState:
    """Planar position plus course: x/y in NM, heading in degrees, speed in kt."""

    x: float
    y: float
    heading: float
    speed: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(self.heading))

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class PerformanceEnvelope:
    """Flyability limits and the fuel model parameters of one aircraft."""

    v_min: float
    v_max: float
    a_max: float  # kt/s, magnitude bound for acceleration and deceleration
    fuel_category: FuelCategory
    nominal_speed: float
    nominal_burn: float  # kg/s when flying at nominal_speed
    max_heading_change_per_order: float = 90.0


@dataclass(frozen=True)
class AircraftSpec:
    id: int
    initial: AircraftState
    final: AircraftState
    perf: PerformanceEnvelope


class OrderKind(Enum):
    TURN = "turn"
    SPEED = "speed"
    TURN_AND_SPEED = "turn_and_speed"
    DO_NOTHING = "do_nothing"
    STRAIGHT_TO_END = "straight_to_end"


# Rank used for deterministic lexicographic tie-breaking of order sequences.
_KIND_RANK = {
    OrderKind.TURN: 0,
    OrderKind.SPEED: 1,
    OrderKind.TURN_AND_SPEED: 2,
    OrderKind.DO_NOTHING: 3,
    OrderKind.STRAIGHT_TO_END: 4,
}


@dataclass(frozen=True)
class ManoeuvreOrder:
    """One ATC-style order: a change of bearing and/or speed, a hold, or the
    clearance to proceed directly to the final position.

    ``turn_deg`` is a signed bearing change (positive = clockwise/right);
    ``speed_pct`` is a signed percentage of the current speed.
    """

    kind: OrderKind
    turn_deg: float = 0.0
    speed_pct: float = 0.0

    def __post_init__(self):
        if self.kind in (OrderKind.TURN, OrderKind.TURN_AND_SPEED) and self.turn_deg == 0.0:
            raise ValueError("turn order requires a nonzero bearing change")
        if self.kind in (OrderKind.SPEED, OrderKind.TURN_AND_SPEED):
            if self.speed_pct == 0.0:
                raise ValueError("speed order requires a nonzero percentage")
            if self.speed_pct <= -100.0:
                raise ValueError("speed order must leave a positive target speed")

    @classmethod
    def turn(cls, deg: float) -> "ManoeuvreOrder":
        return cls(OrderKind.TURN, turn_deg=deg)

    @classmethod
    def speed(cls, pct: float) -> "ManoeuvreOrder":
        return cls(OrderKind.SPEED, speed_pct=pct)

    @classmethod
    def turn_and_speed(cls, deg: float, pct: float) -> "ManoeuvreOrder":
        return cls(OrderKind.TURN_AND_SPEED, turn_deg=deg, speed_pct=pct)

    @classmethod
    def do_nothing(cls) -> "ManoeuvreOrder":
        return cls(OrderKind.DO_NOTHING)

    @classmethod
    def straight_to_end(cls) -> "ManoeuvreOrder":
        return cls(OrderKind.STRAIGHT_TO_END)

    @property
    def is_manoeuvre(self) -> bool:
        return self.kind in (OrderKind.TURN, OrderKind.SPEED, OrderKind.TURN_AND_SPEED)

    def sort_key(self) -> Tuple[int, float, float]:
        return (_KIND_RANK[self.kind], self.turn_deg, self.speed_pct)

    def describe(self) -> str:
        if self.kind is OrderKind.TURN:
            return f"turn {self.turn_deg:+g} deg"
        if self.kind is OrderKind.SPEED:
            return f"speed {self.speed_pct:+g}%"
        if self.kind is OrderKind.TURN_AND_SPEED:
            return f"turn {self.turn_deg:+g} deg & speed {self.speed_pct:+g}%"
        if self.kind is OrderKind.DO_NOTHING:
            return "hold"
        return "direct to end"


@dataclass(frozen=True)
class TrajectorySegment:
    """Straight leg flown on a constant heading.

    Speed ramps linearly from v_start to v_end over the first
    ``accel_duration`` seconds, then holds v_end.
    """

    t_start: float
    duration: float
    x: float
    y: float
    heading: float
    v_start: float
    v_end: float
    accel_duration: float

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    def distance_at(self, tau: float) -> float:
        """Along-track distance (NM) covered tau seconds into the segment."""
        ta = self.accel_duration
        if ta > 0.0:
            a = (self.v_end - self.v_start) / ta
            tr = tau if tau < ta else ta
            d = self.v_start * tr + 0.5 * a * tr * tr
            if tau > ta:
                d += self.v_end * (tau - ta)
        else:
            d = self.v_start * tau
        return d * KT_TO_NM_PER_S

    @property
    def length(self) -> float:
        return self.distance_at(self.duration)

    def position_at(self, tau: float) -> Tuple[float, float]:
        d = self.distance_at(tau)
        h = math.radians(self.heading)
        return (self.x + d * math.sin(h), self.y + d * math.cos(h))

    @property
    def end_position(self) -> Tuple[float, float]:
        return self.position_at(self.duration)


@dataclass
class Trajectory:
    """A realized candidate trajectory: the order sequence that produced it,
    its kinematic segments (time-contiguous from t=0), and its fuel cost.

    Instances are immutable by convention once built; the private track cache
    only memoizes sampled positions.
    """

    orders: Tuple[Tuple[int, ManoeuvreOrder], ...]
    segments: Tuple[TrajectorySegment, ...]
    cost: float
    _tracks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._starts = [s.t_start for s in self.segments]

    @property
    def arrival_time(self) -> float:
        return self.segments[-1].t_end

    @property
    def end_position(self) -> Tuple[float, float]:
        return self.segments[-1].end_position

    def order_key(self) -> tuple:
        return tuple((seg, *order.sort_key()) for seg, order in self.orders)

    def describe_orders(self) -> str:
        return "; ".join(f"seg {seg}: {order.describe()}" for seg, order in self.orders)


def position_at(traj: Trajectory, t: float) -> Tuple[float, float]:
    """Exact position at time t under the piecewise kinematic model."""
    if t < -1e-9 or t > traj.arrival_time + 1e-9:
        raise DomainError(f"t={t} outside [0, {traj.arrival_time}]")
    idx = bisect_right(traj._starts, t) - 1
    if idx < 0:
        idx = 0
    seg = traj.segments[idx]
    tau = min(max(t - seg.t_start, 0.0), seg.duration)
    return seg.position_at(tau)


def position_at_array(traj: Trajectory, ts: np.ndarray) -> np.ndarray:
    """Vectorized position_at: returns an (len(ts), 2) array."""
    ts = np.asarray(ts, dtype=float)
    if ts.size and (ts.min() < -1e-9 or ts.max() > traj.arrival_time + 1e-9):
        raise DomainError("sample times outside the trajectory's period")
    starts = np.array(traj._starts)
    idx = np.clip(np.searchsorted(starts, ts, side="right") - 1, 0, len(starts) - 1)

    segs = traj.segments
    dur = np.array([s.duration for s in segs])[idx]
    tau = np.clip(ts - starts[idx], 0.0, dur)
    v0 = np.array([s.v_start for s in segs])[idx]
    ve = np.array([s.v_end for s in segs])[idx]
    ta = np.array([s.accel_duration for s in segs])[idx]
    accel = np.where(ta > 0.0, (ve - v0) / np.where(ta > 0.0, ta, 1.0), 0.0)

    tr = np.minimum(tau, ta)
    dist = (v0 * tr + 0.5 * accel * tr * tr + ve * np.maximum(tau - ta, 0.0)) * KT_TO_NM_PER_S
    h = np.radians(np.array([s.heading for s in segs])[idx])
    x0 = np.array([s.x for s in segs])[idx]
    y0 = np.array([s.y for s in segs])[idx]
    return np.column_stack((x0 + dist * np.sin(h), y0 + dist * np.cos(h)))


@dataclass(frozen=True)
class DiscretisationParams:
    """Trajectory-space discretisation: number of time segments, maximum
    manoeuvre orders per trajectory, and manoeuvre-catalog granularity."""

    segments: int
    max_manoeuvres: int
    granularity: int


@dataclass(frozen=True)
class SeparationParams:
    min_horizontal: float = 5.0  # NM
    safety_margin: float = 0.5  # NM
    sample_step: float = 5.0  # s

    @property
    def threshold(self) -> float:
        return self.min_horizontal + self.safety_margin


@dataclass(frozen=True)
class ConflictInstance:
    """One conflict to resolve: the aircraft, the shared resolution period,
    and the separation / discretisation settings."""

    aircraft: Tuple[AircraftSpec, ...]
    resolution_period_s: float
    separation: SeparationParams
    discretisation: DiscretisationParams
    eps_pos: float = 0.1  # NM, arrival position tolerance
    eps_t: float = 1.0  # s, arrival time tolerance
    forbidden_zones: Tuple[Tuple[Tuple[float, float], ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "aircraft", tuple(self.aircraft))


@dataclass(frozen=True)
class Violation:
    """One validation finding; aircraft_id is None for instance-level issues."""

    aircraft_id: Optional[int]
    field: str
    message: str

    def __str__(self):
        who = f"aircraft {self.aircraft_id}" if self.aircraft_id is not None else "instance"
        return f"{who}: {self.field}: {self.message}"


def validate_instance(inst: ConflictInstance) -> List[Violation]:
    """Check all structural invariants; returns an empty list when well-formed."""
    out: List[Violation] = []

    if inst.resolution_period_s <= 0:
        out.append(Violation(None, "resolution_period_s", "must be > 0"))
    d = inst.discretisation
    if d.segments < 1:
        out.append(Violation(None, "discretisation.segments", "must be >= 1"))
    if d.max_manoeuvres < 0:
        out.append(Violation(None, "discretisation.max_manoeuvres", "must be >= 0"))
    if d.max_manoeuvres > d.segments:
        out.append(Violation(None, "discretisation.max_manoeuvres", "must be <= segments"))
    if d.granularity not in (1, 2, 3, 4):
        out.append(Violation(None, "discretisation.granularity", "must be in {1,2,3,4}"))
    s = inst.separation
    for name, value in (("min_horizontal", s.min_horizontal),
                        ("safety_margin", s.safety_margin),
                        ("sample_step", s.sample_step)):
        if value <= 0:
            out.append(Violation(None, f"separation.{name}", "must be > 0"))
    if len(inst.aircraft) < 1:
        out.append(Violation(None, "aircraft", "at least one aircraft required"))

    seen_ids = set()
    for ac in inst.aircraft:
        if ac.id in seen_ids:
            out.append(Violation(ac.id, "id", "duplicate id"))
        seen_ids.add(ac.id)
        for label, state in (("initial", ac.initial), ("final", ac.final)):
            if state.speed <= 0:
                out.append(Violation(ac.id, f"{label}.speed", "must be > 0"))
        if ac.initial.position == ac.final.position:
            out.append(Violation(ac.id, "final", "final position equals initial position"))
        p = ac.perf
        if not (0 < p.v_min < p.v_max):
            out.append(Violation(ac.id, "perf.v_min", "requires 0 < v_min < v_max"))
        if p.a_max <= 0:
            out.append(Violation(ac.id, "perf.a_max", "must be > 0"))
        if not (p.v_min <= p.nominal_speed <= p.v_max):
            out.append(Violation(ac.id, "perf.nominal_speed", "must lie in [v_min, v_max]"))
        if p.nominal_burn <= 0:
            out.append(Violation(ac.id, "perf.nominal_burn", "must be > 0"))
        if p.max_heading_change_per_order <= 0:
            out.append(Violation(ac.id, "perf.max_heading_change_per_order", "must be > 0"))
    return out
