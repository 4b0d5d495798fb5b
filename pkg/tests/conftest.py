"""Shared builders for hand-made trajectories, toy candidate sets and the
randomized instance mix used across the suite."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np
import pytest

from deconflict.bench import ScenarioKind, ScenarioSpec, make_instance
from deconflict.model import (
    AircraftSpec,
    AircraftState,
    ConflictInstance,
    DiscretisationParams,
    FuelCategory,
    ManoeuvreOrder,
    PerformanceEnvelope,
    SeparationParams,
    Trajectory,
    TrajectorySegment,
)
from deconflict.trajgen import CandidateSet, GenerationStats


def default_perf(speed: float = 450.0, **overrides) -> PerformanceEnvelope:
    kwargs = dict(
        v_min=0.55 * speed,
        v_max=1.45 * speed,
        a_max=2.5,
        fuel_category=FuelCategory.MEDIUM,
        nominal_speed=speed,
        nominal_burn=0.05,
    )
    kwargs.update(overrides)
    return PerformanceEnvelope(**kwargs)


def straight_trajectory(
    x: float, y: float, heading: float, speed: float, period_s: float, cost: float
) -> Trajectory:
    """Single constant-speed leg used to build fully controlled toy sets."""
    seg = TrajectorySegment(0.0, period_s, x, y, heading, speed, speed, 0.0)
    return Trajectory(
        orders=((0, ManoeuvreOrder.straight_to_end()),),
        segments=(seg,),
        cost=cost,
    )


def toy_candidates(lists: Sequence[Sequence[Trajectory]], period_s: float) -> CandidateSet:
    aircraft = tuple(
        AircraftSpec(
            id=i,
            initial=AircraftState(0.0, float(10 * i), 90.0, 400.0),
            final=AircraftState(100.0, float(10 * i), 90.0, 400.0),
            perf=default_perf(400.0),
        )
        for i in range(len(lists))
    )
    return CandidateSet(
        aircraft=aircraft,
        trajectories=[list(lst) for lst in lists],
        stats=[GenerationStats(enumerated=len(lst), legal=len(lst)) for lst in lists],
        period_s=period_s,
    )


def two_by_two_candidates(period_s: float = 600.0) -> CandidateSet:
    """Two aircraft, two trajectories each, costs {1, 2} kg per aircraft;
    the only incompatible pair is (first of A, first of B)."""
    a1 = straight_trajectory(0, 0, 90, 360, period_s, 1.0)  # eastbound at y=0
    a2 = straight_trajectory(0, 30, 90, 360, period_s, 2.0)
    b1 = straight_trajectory(60, 0, 270, 360, period_s, 1.0)  # westbound at y=0
    b2 = straight_trajectory(60, 60, 270, 360, period_s, 2.0)
    return toy_candidates([[a1, a2], [b1, b2]], period_s)


SAFE_MIX = [
    # (n_aircraft, p, m, g): combinations whose enumeration provably stays
    # within the C(p, m) * n^m bound and whose oracle space stays small.
    (2, 3, 2, 2),
    (2, 4, 2, 1),
    (2, 3, 2, 2),
    (2, 4, 2, 1),
    (3, 3, 2, 1),
    (3, 3, 1, 2),
    (3, 2, 1, 1),
    (4, 3, 1, 1),
    (4, 2, 1, 1),
    (4, 3, 2, 1),
]


def random_instance_mix(count: int, base_seed: int = 20_240_601) -> List[ConflictInstance]:
    """Deterministic mixed bag of small Roundabout/Crossing instances."""
    instances = []
    for k in range(count):
        n, p, m, g = SAFE_MIX[k % len(SAFE_MIX)]
        kind = ScenarioKind.ROUNDABOUT if k % 2 == 0 else ScenarioKind.CROSSING
        spec = ScenarioSpec(kind=kind, n_aircraft=n, seed=base_seed + 7919 * k)
        instances.append(make_instance(spec, DiscretisationParams(p, m, g)))
    return instances


def integrate_speed_profile(v_start: float, v_end: float, accel_duration: float,
                            duration: float, step: float = 0.001) -> float:
    """Trapezoid integration of the speed profile on a 1 ms grid (plus the
    ramp kink), in NM."""
    a = (v_end - v_start) / accel_duration if accel_duration > 0 else 0.0
    ts = np.arange(0.0, duration, step)
    ts = np.unique(np.concatenate([ts, [min(accel_duration, duration), duration]]))
    v = np.where(ts < accel_duration, v_start + a * ts, v_end)
    integral = np.trapezoid(v, ts) if hasattr(np, "trapezoid") else np.trapz(v, ts)
    return float(integral) / 3600.0


def fine_min_distance(a: Trajectory, b: Trajectory, step: float = 0.01) -> float:
    """Near-continuous minimum separation oracle."""
    from deconflict.model import position_at_array

    T = a.arrival_time
    ts = np.arange(0.0, T, step)
    ts = np.append(ts, T)
    pa = position_at_array(a, ts)
    pb = position_at_array(b, ts)
    d = pa - pb
    return float(np.sqrt((d[:, 0] ** 2 + d[:, 1] ** 2).min()))


@pytest.fixture(scope="session")
def instance_mix():
    return random_instance_mix(20)
