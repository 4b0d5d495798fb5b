"""Candidate trajectory generation.

Builds the manoeuvre catalog for a granularity level, enumerates every order
sequence with at most ``max_manoeuvres`` manoeuvre orders over the time
segments, realizes each sequence kinematically, filters the illegal ones and
costs the survivors with a cubic-in-speed fuel model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ParameterError, ResourceLimitError, UnsolvableInstanceError
from .model import (
    AircraftSpec,
    ConflictInstance,
    DiscretisationParams,
    ManoeuvreOrder,
    OrderKind,
    PerformanceEnvelope,
    Trajectory,
    TrajectorySegment,
    bearing,
    normalize_heading,
    validate_instance,
)

#: Catalog step (degrees and percent) per granularity level.
STEP_BY_GRANULARITY = {1: 20.0, 2: 10.0, 3: 5.0, 4: 2.0}

#: Largest bearing/speed offset in the catalog (degrees / percent).
MAX_OFFSET = 40.0

#: Combined turn-and-speed orders are only offered when the period is split
#: into at most this many segments.
TURN_AND_SPEED_MAX_SEGMENTS = 2

_REL_TOL = 1e-9


@dataclass(frozen=True)
class ManoeuvreCatalog:
    """The manoeuvre orders available at the start of each time segment.

    ``n`` is the number of manoeuvre orders proper; ``n_reported`` follows the
    benchmark-table convention of also counting the do-nothing choice.
    """

    orders: Tuple[ManoeuvreOrder, ...]

    @property
    def n(self) -> int:
        return len(self.orders)

    @property
    def n_reported(self) -> int:
        return len(self.orders) + 1


def build_catalog(granularity: int, allow_turn_and_speed: bool = False) -> ManoeuvreCatalog:
    """Catalog for a granularity level: turn and speed offsets at every
    multiple of the step up to +/-40 deg / +/-40%, plus (optionally) the four
    single-step combined orders."""
    if granularity not in STEP_BY_GRANULARITY:
        raise ParameterError(f"granularity must be in 1..4, got {granularity}")
    step = STEP_BY_GRANULARITY[granularity]
    k_max = int(MAX_OFFSET / step)
    orders: List[ManoeuvreOrder] = []
    for k in range(1, k_max + 1):
        orders.append(ManoeuvreOrder.turn(+k * step))
        orders.append(ManoeuvreOrder.turn(-k * step))
    for k in range(1, k_max + 1):
        orders.append(ManoeuvreOrder.speed(+k * step))
        orders.append(ManoeuvreOrder.speed(-k * step))
    if allow_turn_and_speed:
        for sd in (+step, -step):
            for sp in (+step, -step):
                orders.append(ManoeuvreOrder.turn_and_speed(sd, sp))
    return ManoeuvreCatalog(tuple(orders))


def count_bound(p: int, m: int, n: int) -> int:
    """Upper bound on the number of generated trajectories: C(p, m) * n^m."""
    if not (0 <= m <= p):
        raise ParameterError(f"need 0 <= m <= p, got m={m}, p={p}")
    if n < 1:
        raise ParameterError(f"need n >= 1, got n={n}")
    return math.comb(p, m) * n**m


def enumeration_size(p: int, m: int, n_orders: int) -> int:
    """Exact number of order sequences the generator enumerates.

    Sequences place 1..m catalog orders on distinct segment starts and a
    direct-to-end clearance on any later segment (segments in between hold
    course), plus the single zero-manoeuvre direct path.
    """
    total = 1  # direct path: clearance at segment 0
    for k in range(1, p):  # segment where the direct-to-end clearance starts
        for j in range(1, min(m, k) + 1):
            total += math.comb(k, j) * n_orders**j
    return total


@dataclass(frozen=True)
class GenerationStats:
    enumerated: int
    legal: int


@dataclass
class CandidateSet:
    """Per-aircraft legal trajectories, each list sorted by ascending cost."""

    aircraft: Tuple[AircraftSpec, ...]
    trajectories: List[List[Trajectory]]
    stats: List[GenerationStats]
    period_s: float

    @property
    def n_aircraft(self) -> int:
        return len(self.aircraft)

    @property
    def domain_sizes(self) -> List[int]:
        return [len(lst) for lst in self.trajectories]

    @property
    def mean_legal_per_aircraft(self) -> float:
        return sum(self.domain_sizes) / len(self.trajectories)

    @property
    def total_pair_products(self) -> int:
        sizes = self.domain_sizes
        return sum(
            sizes[i] * sizes[j]
            for i in range(len(sizes))
            for j in range(i + 1, len(sizes))
        )


def _solve_direct_speed(v0: float, dist_nm: float, tau: float, a: float):
    """Target speed for covering dist_nm in tau seconds starting at v0 kt,
    ramping at rate a (kt/s) then holding.  Returns (v_target, ramp_duration)
    or None when no such speed exists."""
    if tau <= 0.0:
        return None
    need = dist_nm * 3600.0  # kt*s
    steady = v0 * tau
    if abs(need - steady) <= max(1.0, abs(steady)) * _REL_TOL:
        return v0, 0.0
    if need > steady:  # accelerate
        disc = a * (2.0 * v0 * tau + a * tau * tau - 2.0 * need)
        if disc < 0.0:
            return None
        vf = (v0 + a * tau) - math.sqrt(disc)
    else:  # decelerate
        disc = a * (a * tau * tau - 2.0 * v0 * tau + 2.0 * need)
        if disc < 0.0:
            return None
        vf = (v0 - a * tau) + math.sqrt(disc)
    if vf <= 0.0:
        return None
    ramp = abs(vf - v0) / a
    if ramp > tau * (1.0 + _REL_TOL):
        return None
    return vf, min(ramp, tau)


def _realize(
    spec: AircraftSpec,
    plan: Sequence[Tuple[int, ManoeuvreOrder]],
    direct_segment: int,
    p: int,
    period_s: float,
    forbidden: Sequence[Sequence[Tuple[float, float]]],
    eps_pos: float,
    eps_t: float,
    zone_sample_step: float,
) -> Optional[Trajectory]:
    """Realize one order sequence; returns None when any legality rule fails."""
    perf = spec.perf
    seg_len = period_s / p
    x, y = spec.initial.x, spec.initial.y
    heading = spec.initial.heading
    v = spec.initial.speed
    if not (perf.v_min * (1 - _REL_TOL) <= v <= perf.v_max * (1 + _REL_TOL)):
        return None

    by_segment: Dict[int, ManoeuvreOrder] = dict(plan)
    segments: List[TrajectorySegment] = []
    t = 0.0
    for s in range(direct_segment):
        order = by_segment.get(s)
        target = v
        if order is not None:
            if order.turn_deg:
                if abs(order.turn_deg) > perf.max_heading_change_per_order:
                    return None
                heading = normalize_heading(heading + order.turn_deg)
            if order.speed_pct:
                target = v * (1.0 + order.speed_pct / 100.0)
                if not (perf.v_min * (1 - _REL_TOL) <= target <= perf.v_max * (1 + _REL_TOL)):
                    return None
        if target != v:
            ramp = abs(target - v) / perf.a_max
            if ramp > seg_len * (1.0 + _REL_TOL):
                return None  # ordered speed change cannot finish in its segment
            ramp = min(ramp, seg_len)
        else:
            ramp = 0.0
        seg = TrajectorySegment(t, seg_len, x, y, heading, v, target, ramp)
        x, y = seg.end_position
        v = target
        t += seg_len

    # Direct-to-end clearance: turn toward the final position and pick the
    # speed that lands there exactly when the period ends.  The clearance
    # adjusts bearing as needed; the per-order turn bound applies to ordered
    # turns only.
    fx, fy = spec.final.x, spec.final.y
    dist = math.hypot(fx - x, fy - y)
    tau = period_s - t
    if dist <= 0.0:
        return None
    new_heading = bearing(x, y, fx, fy)
    solved = _solve_direct_speed(v, dist, tau, perf.a_max)
    if solved is None:
        return None
    vf, ramp = solved
    if not (perf.v_min * (1 - _REL_TOL) <= vf <= perf.v_max * (1 + _REL_TOL)):
        return None
    segments.append(TrajectorySegment(t, tau, x, y, new_heading, v, vf, ramp))

    orders = tuple(sorted(by_segment.items())) + (
        (direct_segment, ManoeuvreOrder.straight_to_end()),
    )
    traj = Trajectory(orders=orders, segments=tuple(segments), cost=0.0)

    ex, ey = traj.end_position
    if math.hypot(ex - fx, ey - fy) > eps_pos or abs(traj.arrival_time - period_s) > eps_t:
        return None
    if forbidden and _crosses_forbidden_zone(traj, forbidden, zone_sample_step):
        return None
    traj.cost = trajectory_cost(traj, perf)
    return traj


def trajectory_cost(traj: Trajectory, perf: PerformanceEnvelope) -> float:
    """Fuel burned over the whole trajectory (kg).

    Burn rate scales with the cube of the speed ratio v/nominal_speed;
    integrated in closed form over each constant-acceleration portion.
    """
    k = perf.nominal_burn / perf.nominal_speed**3
    total = 0.0
    for seg in traj.segments:
        ta = seg.accel_duration
        if ta > 0.0:
            a = (seg.v_end - seg.v_start) / ta
            total += k * (seg.v_end**4 - seg.v_start**4) / (4.0 * a)
        total += k * seg.v_end**3 * (seg.duration - ta)
    return total


def _point_in_convex_polygon(px: float, py: float, poly: Sequence[Tuple[float, float]]) -> bool:
    sign = 0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        if cross != 0.0:
            s = 1 if cross > 0 else -1
            if sign == 0:
                sign = s
            elif s != sign:
                return False
    return True


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return False


def _crosses_forbidden_zone(traj, zones, sample_step: float) -> bool:
    """Test the sampled polyline of the trajectory against each convex zone."""
    import numpy as np

    from .model import position_at_array

    ts = np.arange(0.0, traj.arrival_time, sample_step)
    ts = np.append(ts, traj.arrival_time)
    pts = position_at_array(traj, ts)
    for poly in zones:
        for px, py in pts:
            if _point_in_convex_polygon(px, py, poly):
                return True
        edges = [(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))]
        for i in range(len(pts) - 1):
            a = (pts[i][0], pts[i][1])
            b = (pts[i + 1][0], pts[i + 1][1])
            for q1, q2 in edges:
                if _segments_intersect(a, b, q1, q2):
                    return True
    return False


def generate(
    spec: AircraftSpec,
    params: DiscretisationParams,
    period_s: float,
    forbidden: Sequence[Sequence[Tuple[float, float]]] = (),
    catalog: Optional[ManoeuvreCatalog] = None,
    hard_cap: int = 1_000_000,
    eps_pos: float = 0.1,
    eps_t: float = 1.0,
    zone_sample_step: float = 5.0,
) -> List[Trajectory]:
    """All legal trajectories for one aircraft.

    Enumerates every placement of at most ``max_manoeuvres`` catalog orders on
    distinct segment starts, with the direct-to-end clearance starting at any
    segment after the last manoeuvre (immediately, for the zero-manoeuvre
    path); every sequence is realized and checked for legality.
    """
    p, m = params.segments, params.max_manoeuvres
    if catalog is None:
        catalog = build_catalog(
            params.granularity,
            allow_turn_and_speed=(p <= TURN_AND_SPEED_MAX_SEGMENTS),
        )
    n_orders = len(catalog.orders)
    projected = enumeration_size(p, m, n_orders)
    if projected > hard_cap:
        raise ResourceLimitError(
            f"enumeration of {projected} trajectories exceeds the cap of {hard_cap}"
        )

    legal: List[Trajectory] = []
    direct = _realize(spec, (), 0, p, period_s, forbidden, eps_pos, eps_t,
                      zone_sample_step)
    if direct is not None:
        legal.append(direct)
    for direct_segment in range(1, p):
        for j in range(1, min(m, direct_segment) + 1):
            for slots in combinations(range(direct_segment), j):
                for assignment in product(catalog.orders, repeat=j):
                    traj = _realize(
                        spec,
                        tuple(zip(slots, assignment)),
                        direct_segment,
                        p,
                        period_s,
                        forbidden,
                        eps_pos,
                        eps_t,
                        zone_sample_step,
                    )
                    if traj is not None:
                        legal.append(traj)
    return legal


def build_candidate_set(
    inst: ConflictInstance,
    catalog: Optional[ManoeuvreCatalog] = None,
    hard_cap: int = 1_000_000,
) -> CandidateSet:
    """Generate, filter and cost-sort the candidate trajectories of every
    aircraft in the instance."""
    violations = validate_instance(inst)
    if violations:
        raise ParameterError(
            "invalid instance: " + "; ".join(str(v) for v in violations)
        )
    p, m = inst.discretisation.segments, inst.discretisation.max_manoeuvres
    cat = catalog or build_catalog(
        inst.discretisation.granularity,
        allow_turn_and_speed=(p <= TURN_AND_SPEED_MAX_SEGMENTS),
    )
    enumerated = enumeration_size(p, m, len(cat.orders))

    lists: List[List[Trajectory]] = []
    stats: List[GenerationStats] = []
    for spec in inst.aircraft:
        trajs = generate(
            spec,
            inst.discretisation,
            inst.resolution_period_s,
            forbidden=inst.forbidden_zones,
            catalog=cat,
            hard_cap=hard_cap,
            eps_pos=inst.eps_pos,
            eps_t=inst.eps_t,
            zone_sample_step=inst.separation.sample_step,
        )
        if not trajs:
            raise UnsolvableInstanceError(spec.id)
        trajs.sort(key=lambda tr: (tr.cost, tr.order_key()))
        lists.append(trajs)
        stats.append(GenerationStats(enumerated=enumerated, legal=len(trajs)))
    return CandidateSet(
        aircraft=tuple(inst.aircraft),
        trajectories=lists,
        stats=stats,
        period_s=inst.resolution_period_s,
    )
