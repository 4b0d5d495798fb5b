"""Benchmark scenarios and the experiment harness.

Two synthetic geometries are provided: a roundabout (aircraft spread on a
circle, all flying through the common center to the antipode) and crossing
flows (two in-trail streams meeting at an angle).  Campaigns regenerate each
instance with per-run derived seeds, solve under a timeout, and aggregate
success rates and timings into CSV-friendly records.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DeconflictError, ResourceLimitError, UnsolvableInstanceError
from .greedy import solve_greedy
from .model import (
    AircraftSpec,
    AircraftState,
    ConflictInstance,
    DiscretisationParams,
    FuelCategory,
    PerformanceEnvelope,
    SeparationParams,
    bearing,
)
from .sbf import SolveStatus, Solution, solve_oracle, solve_sbf
from .separation import CompatibilityCache, build_matrix
from .trajgen import build_candidate_set, build_catalog, count_bound
from .wcsp import ExternalStatus, export_wcsp, formalize_wcsp, run_external_solver


class ScenarioKind(Enum):
    ROUNDABOUT = "roundabout"
    CROSSING = "crossing"


#: Distance (NM) from the lead aircraft of each crossing flow to the junction.
CROSSING_LEAD_DISTANCE = 25.0

#: Slack factor applied to the slowest direct flight time to fix the
#: resolution period.
PERIOD_SLACK = 1.2


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    n_aircraft: int
    seed: int = 0
    radius: float = 30.0  # NM, roundabout circle
    crossing_angle: float = 90.0  # degrees between the two airways
    spacing: float = 8.0  # NM in-trail distance
    base_speed: float = 450.0  # kt
    noise_pos: float = 1.0  # NM, uniform +/- jitter on positions
    noise_speed: Optional[float] = None  # kt, defaults to 5% of base_speed

    def __post_init__(self):
        if self.n_aircraft < 2:
            raise ValueError("scenarios need at least 2 aircraft")
        if self.radius <= 0 or self.spacing <= 0:
            raise ValueError("radius and spacing must be positive")
        if not (0.0 < self.crossing_angle < 180.0):
            raise ValueError("crossing angle must be in (0, 180)")
        if self.noise_speed is None:
            object.__setattr__(self, "noise_speed", 0.05 * self.base_speed)


_CATEGORIES = (FuelCategory.LIGHT, FuelCategory.MEDIUM, FuelCategory.HEAVY)


def _random_perf(rng: np.random.Generator, speed: float) -> PerformanceEnvelope:
    category = _CATEGORIES[int(rng.integers(0, len(_CATEGORIES)))]
    return PerformanceEnvelope(
        v_min=speed * float(rng.uniform(0.50, 0.60)),
        v_max=speed * float(rng.uniform(1.42, 1.55)),
        a_max=float(rng.uniform(2.4, 3.2)),
        fuel_category=category,
        nominal_speed=speed,
        nominal_burn=category.nominal_burn,
    )


def _finish_instance(
    aircraft: List[AircraftSpec],
    disc: DiscretisationParams,
    separation: SeparationParams,
) -> ConflictInstance:
    slowest = max(
        math.hypot(ac.final.x - ac.initial.x, ac.final.y - ac.initial.y)
        / ac.initial.speed
        * 3600.0
        for ac in aircraft
    )
    return ConflictInstance(
        aircraft=tuple(aircraft),
        resolution_period_s=PERIOD_SLACK * slowest,
        separation=separation,
        discretisation=disc,
    )


def make_roundabout(
    spec: ScenarioSpec,
    disc: DiscretisationParams,
    separation: SeparationParams = SeparationParams(),
) -> ConflictInstance:
    """Aircraft evenly spread on a circle, each bound for the antipode of its
    start point, with uniform jitter on positions and speeds."""
    rng = np.random.default_rng(spec.seed)
    aircraft = []
    for i in range(spec.n_aircraft):
        phi = math.radians(360.0 * i / spec.n_aircraft)
        nx, ny = spec.radius * math.sin(phi), spec.radius * math.cos(phi)
        ix = nx + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
        iy = ny + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
        fx = -nx + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
        fy = -ny + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
        speed = spec.base_speed + float(rng.uniform(-spec.noise_speed, spec.noise_speed))
        heading = bearing(ix, iy, fx, fy)
        aircraft.append(
            AircraftSpec(
                id=i,
                initial=AircraftState(ix, iy, heading, speed),
                final=AircraftState(fx, fy, heading, speed),
                perf=_random_perf(rng, speed),
            )
        )
    return _finish_instance(aircraft, disc, separation)


def make_crossing(
    spec: ScenarioSpec,
    disc: DiscretisationParams,
    separation: SeparationParams = SeparationParams(),
) -> ConflictInstance:
    """Two in-trail flows meeting at the configured angle; finals lie on the
    same airway beyond the junction, so both flow leaders reach the junction
    simultaneously at equal speeds."""
    rng = np.random.default_rng(spec.seed)
    half = spec.crossing_angle / 2.0
    headings = (90.0 + half, 90.0 - half)
    counts = (math.ceil(spec.n_aircraft / 2), spec.n_aircraft // 2)
    aircraft = []
    ac_id = 0
    for flow, (h, count) in enumerate(zip(headings, counts)):
        dx, dy = math.sin(math.radians(h)), math.cos(math.radians(h))
        for rank in range(count):
            back = CROSSING_LEAD_DISTANCE + rank * spec.spacing
            # equal travel distance along the airway keeps the in-trail
            # order and gaps; the trailing aircraft ends closer past the
            # junction instead of overtaking
            ahead = CROSSING_LEAD_DISTANCE + (count - 1 - rank) * spec.spacing
            ix = -back * dx + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
            iy = -back * dy + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
            fx = ahead * dx + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
            fy = ahead * dy + float(rng.uniform(-spec.noise_pos, spec.noise_pos))
            speed = spec.base_speed + float(
                rng.uniform(-spec.noise_speed, spec.noise_speed)
            )
            heading = bearing(ix, iy, fx, fy)
            aircraft.append(
                AircraftSpec(
                    id=ac_id,
                    initial=AircraftState(ix, iy, heading, speed),
                    final=AircraftState(fx, fy, heading, speed),
                    perf=_random_perf(rng, speed),
                )
            )
            ac_id += 1
    return _finish_instance(aircraft, disc, separation)


def make_instance(
    spec: ScenarioSpec,
    disc: DiscretisationParams,
    separation: SeparationParams = SeparationParams(),
) -> ConflictInstance:
    if spec.kind is ScenarioKind.ROUNDABOUT:
        return make_roundabout(spec, disc, separation)
    return make_crossing(spec, disc, separation)


def derive_seed(base_seed: int, run_index: int) -> int:
    """Per-run seed: base XOR run index (documented for replay)."""
    return base_seed ^ run_index


@dataclass
class RunRecord:
    scenario: str
    n_aircraft: int
    params: DiscretisationParams
    method: str
    seed: int
    outcome: SolveStatus
    gen_s: float
    solve_s: float
    cost_kg: Optional[float]
    traj_per_ac: float
    pair_checks: int


CSV_FIELDS = [
    "scenario", "n_aircraft", "p", "m", "granularity", "traj_per_ac",
    "method", "outcome", "gen_s", "solve_s", "cost_kg", "pair_checks", "seed",
]


def record_to_row(rec: RunRecord) -> Dict[str, object]:
    return {
        "scenario": rec.scenario,
        "n_aircraft": rec.n_aircraft,
        "p": rec.params.segments,
        "m": rec.params.max_manoeuvres,
        "granularity": rec.params.granularity,
        "traj_per_ac": f"{rec.traj_per_ac:.2f}",
        "method": rec.method,
        "outcome": rec.outcome.value,
        "gen_s": f"{rec.gen_s:.4f}",
        "solve_s": f"{rec.solve_s:.4f}",
        "cost_kg": "" if rec.cost_kg is None else f"{rec.cost_kg:.6f}",
        "pair_checks": rec.pair_checks,
        "seed": rec.seed,
    }


def write_csv(records: Sequence[RunRecord], path: Path | str) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow(record_to_row(rec))
    return path


def _solve_one(
    method: str,
    candidates,
    separation: SeparationParams,
    timeout_s: float,
    solver_path: Optional[str],
) -> Tuple[SolveStatus, Optional[float], float, int]:
    """Run one method; returns (outcome, cost, solve_s, pair_checks)."""
    cache = CompatibilityCache()
    t0 = time.perf_counter()
    if method == "sbf":
        res = solve_sbf(candidates, separation, deadline_s=timeout_s, cache=cache)
        cost = res.solution.total_cost if res.solution else None
        return res.status, cost, res.stats.wall_s, res.stats.pair_checks
    if method == "greedy":
        sol = solve_greedy(candidates, separation, cache=cache, deadline_s=timeout_s)
        if sol.timed_out:
            return SolveStatus.TIMEOUT, None, sol.wall_s, sol.pair_checks
        if sol.success:
            # Every aircraft on its cheapest trajectory achieves the global
            # lower bound, so that greedy outcome is provably optimal.
            status = (
                SolveStatus.OPTIMAL
                if all(v == 0 for v in sol.indices)
                else SolveStatus.SOLUTION
            )
            return status, sol.total_cost, sol.wall_s, sol.pair_checks
        return SolveStatus.NO_SOLUTION, None, sol.wall_s, sol.pair_checks
    if method == "oracle":
        res = solve_oracle(candidates, separation)
        cost = res.solution.total_cost if res.solution else None
        return res.status, cost, res.stats.wall_s, res.stats.pair_checks
    if method == "external":
        import tempfile

        try:
            matrix = build_matrix(candidates, separation, deadline_s=timeout_s)
        except ResourceLimitError:
            return (
                SolveStatus.TIMEOUT,
                None,
                time.perf_counter() - t0,
                0,
            )
        wcsp = formalize_wcsp(candidates, matrix=matrix)
        with tempfile.NamedTemporaryFile(suffix=".wcsp", delete=False) as fh:
            tmp = Path(fh.name)
        try:
            export_wcsp(wcsp, tmp)
            remaining = timeout_s - (time.perf_counter() - t0)
            if remaining <= 0:
                return SolveStatus.TIMEOUT, None, time.perf_counter() - t0, matrix.total_checks
            res = run_external_solver(
                tmp, solver_path or "toulbar2", remaining, n_variables=wcsp.n_variables
            )
        finally:
            tmp.unlink(missing_ok=True)
        solve_s = time.perf_counter() - t0
        if res.status is ExternalStatus.OK:
            return SolveStatus.OPTIMAL, res.optimum / wcsp.scale, solve_s, matrix.total_checks
        if res.status is ExternalStatus.TIMEOUT:
            return SolveStatus.TIMEOUT, None, solve_s, matrix.total_checks
        return SolveStatus.ERROR, None, solve_s, matrix.total_checks
    raise ValueError(f"unknown method {method!r}")


def run_campaign(
    spec: ScenarioSpec,
    params_list: Sequence[DiscretisationParams],
    methods: Sequence[str],
    runs: int,
    timeout_s: float,
    separation: SeparationParams = SeparationParams(),
    solver_path: Optional[str] = None,
    gen_hard_cap: int = 1_000_000,
) -> List[RunRecord]:
    """Noise loop: for each (params, method, run) regenerate the instance with
    a derived seed, build candidates, solve under the timeout and record the
    outcome.  Individual failures are recorded, never raised."""
    records: List[RunRecord] = []
    for params in params_list:
        for method in methods:
            for k in range(runs):
                seed_k = derive_seed(spec.seed, k)
                run_spec = replace(spec, seed=seed_k)
                outcome = SolveStatus.ERROR
                cost = None
                gen_s = solve_s = 0.0
                traj_per_ac = 0.0
                checks = 0
                t0 = time.perf_counter()
                try:
                    inst = make_instance(run_spec, params, separation)
                    candidates = build_candidate_set(inst, hard_cap=gen_hard_cap)
                    gen_s = time.perf_counter() - t0
                    traj_per_ac = candidates.mean_legal_per_aircraft
                    outcome, cost, solve_s, checks = _solve_one(
                        method, candidates, separation, timeout_s, solver_path
                    )
                except UnsolvableInstanceError:
                    gen_s = time.perf_counter() - t0
                    outcome = SolveStatus.NO_SOLUTION
                except DeconflictError:
                    outcome = SolveStatus.ERROR
                except MemoryError:
                    outcome = SolveStatus.MEMORY
                records.append(
                    RunRecord(
                        scenario=spec.kind.value,
                        n_aircraft=spec.n_aircraft,
                        params=params,
                        method=method,
                        seed=seed_k,
                        outcome=outcome,
                        gen_s=gen_s,
                        solve_s=solve_s,
                        cost_kg=cost,
                        traj_per_ac=traj_per_ac,
                        pair_checks=checks,
                    )
                )
    return records


@dataclass
class AggregateRow:
    scenario: str
    n_aircraft: int
    params: DiscretisationParams
    method: str
    runs: int
    success_rate: float
    mean_gen_s: Optional[float]
    mean_solve_s: Optional[float]  # over successful runs only
    mean_traj_per_ac: Optional[float]
    mean_cost_kg: Optional[float]
    outcomes: Dict[str, int] = field(default_factory=dict)


_SUCCESS = (SolveStatus.OPTIMAL, SolveStatus.SOLUTION)


def aggregate(records: Sequence[RunRecord]) -> List[AggregateRow]:
    """Group records by (scenario, n_aircraft, params, method) preserving
    first-seen order, and summarize timings and success rates."""
    groups: Dict[tuple, List[RunRecord]] = {}
    order: List[tuple] = []
    for rec in records:
        key = (rec.scenario, rec.n_aircraft, rec.params, rec.method)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)

    rows = []
    for key in order:
        group = groups[key]
        okay = [r for r in group if r.outcome in _SUCCESS]
        gens = [r.gen_s for r in group if r.outcome is not SolveStatus.ERROR]
        trajs = [r.traj_per_ac for r in group if r.traj_per_ac > 0]
        counts: Dict[str, int] = {}
        for r in group:
            counts[r.outcome.value] = counts.get(r.outcome.value, 0) + 1
        rows.append(
            AggregateRow(
                scenario=key[0],
                n_aircraft=key[1],
                params=key[2],
                method=key[3],
                runs=len(group),
                success_rate=len(okay) / len(group),
                mean_gen_s=sum(gens) / len(gens) if gens else None,
                mean_solve_s=sum(r.solve_s for r in okay) / len(okay) if okay else None,
                mean_traj_per_ac=sum(trajs) / len(trajs) if trajs else None,
                mean_cost_kg=(
                    sum(r.cost_kg for r in okay) / len(okay) if okay else None
                ),
                outcomes=counts,
            )
        )
    return rows


@dataclass
class IterationRecord:
    params: DiscretisationParams
    method: str
    status: SolveStatus
    cost_kg: Optional[float]
    elapsed_s: float
    traj_per_ac: float


@dataclass
class IterateResult:
    best: Optional[Solution]
    log: List[IterationRecord]

    @property
    def solved(self) -> bool:
        return self.best is not None


def default_schedule() -> List[DiscretisationParams]:
    return [
        DiscretisationParams(2, 1, 1),
        DiscretisationParams(3, 1, 2),
        DiscretisationParams(4, 2, 2),
        DiscretisationParams(5, 2, 2),
        DiscretisationParams(6, 2, 3),
    ]


def iterate_anytime(
    inst: ConflictInstance,
    schedule: Sequence[DiscretisationParams],
    budget_s: float,
    sbf_max_aircraft: int = 6,
    gen_hard_cap: int = 1_000_000,
) -> IterateResult:
    """Anytime deepening: solve the instance at each discretisation of the
    schedule (ordered by increasing trajectory-count bound), carrying the
    incumbent cost forward as an upper bound for pruning.  Whenever the
    budget runs out, the current incumbent (possibly none) is returned.

    SBF handles an entry while the aircraft count stays within its practical
    range (best-first tuple search floods beyond 6-7 aircraft regardless of
    domain size); the greedy method covers the rest.
    """
    if not schedule:
        raise ValueError("schedule must be non-empty")
    n_cat = [
        build_catalog(par.granularity).n_reported for par in schedule
    ]
    bounds = [
        count_bound(par.segments, par.max_manoeuvres, nc)
        for par, nc in zip(schedule, n_cat)
    ]
    if any(bounds[i] > bounds[i + 1] for i in range(len(bounds) - 1)):
        raise ValueError("schedule must be ordered by increasing count bound")

    t0 = time.perf_counter()
    incumbent: Optional[Solution] = None
    log: List[IterationRecord] = []
    n_aircraft = len(inst.aircraft)

    for params in schedule:
        remaining = budget_s - (time.perf_counter() - t0)
        if remaining <= 0:
            break
        step_inst = replace(inst, discretisation=params)
        iter_t0 = time.perf_counter()
        try:
            candidates = build_candidate_set(step_inst, hard_cap=gen_hard_cap)
        except DeconflictError:
            log.append(
                IterationRecord(params, "gen", SolveStatus.ERROR, None,
                                time.perf_counter() - iter_t0, 0.0)
            )
            continue
        remaining = budget_s - (time.perf_counter() - t0)
        if remaining <= 0:
            log.append(
                IterationRecord(params, "gen", SolveStatus.TIMEOUT, None,
                                time.perf_counter() - iter_t0,
                                candidates.mean_legal_per_aircraft)
            )
            break

        use_sbf = n_aircraft <= sbf_max_aircraft
        ub = incumbent.total_cost if incumbent is not None else None
        if use_sbf:
            res = solve_sbf(
                candidates, inst.separation, deadline_s=remaining, upper_bound=ub
            )
            status, cost = res.status, (
                res.solution.total_cost if res.solution else None
            )
            if res.solution is not None and (ub is None or res.solution.total_cost < ub):
                incumbent = res.solution
            method = "sbf"
        else:
            sol = solve_greedy(candidates, inst.separation, deadline_s=remaining)
            if sol.timed_out:
                status, cost = SolveStatus.TIMEOUT, None
            elif sol.success:
                status, cost = SolveStatus.SOLUTION, sol.total_cost
                if ub is None or sol.total_cost < ub:
                    incumbent = Solution(
                        indices=sol.indices,
                        trajectories=sol.trajectories,
                        total_cost=sol.total_cost,
                        optimal=False,
                    )
            else:
                status, cost = SolveStatus.NO_SOLUTION, None
            method = "greedy"
        log.append(
            IterationRecord(
                params, method, status, cost,
                time.perf_counter() - iter_t0,
                candidates.mean_legal_per_aircraft,
            )
        )
    return IterateResult(best=incumbent, log=log)
