"""Fast non-optimal sequential selection.

Aircraft are fixed one after another; each one takes its cheapest trajectory
compatible with everything already fixed.  There is no backtracking, so the
method can fail even on solvable instances, but it is linear in the total
trajectory count and useful both as an upper-bound seed and as a last resort
on instances too large for the optimal solvers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .model import SeparationParams, Trajectory
from .separation import CompatibilityCache, check_pair_cached
from .trajgen import CandidateSet


@dataclass
class GreedySolution:
    success: bool
    indices: Optional[Tuple[int, ...]]  # instance order when success
    trajectories: Optional[Tuple[Trajectory, ...]]
    total_cost: Optional[float]
    failed_at: Optional[int]  # aircraft id that could not be fixed
    pair_checks: int = 0
    wall_s: float = 0.0
    timed_out: bool = False


def solve_greedy(
    candidates: CandidateSet,
    params: SeparationParams,
    cache: Optional[CompatibilityCache] = None,
    order: Optional[Sequence[int]] = None,
    deadline_s: Optional[float] = None,
) -> GreedySolution:
    """Pick, per aircraft in ``order`` (instance order by default), the first
    cost-sorted trajectory compatible with all previously fixed choices."""
    if cache is None:
        cache = CompatibilityCache()
    t0 = time.perf_counter()
    deadline = None if deadline_s is None else t0 + deadline_s
    n = candidates.n_aircraft
    order = list(order) if order is not None else list(range(n))

    fixed: List[Tuple[int, int]] = []  # (aircraft, trajectory index)
    chosen = [-1] * n
    for i in order:
        found = None
        for ti in range(len(candidates.trajectories[i])):
            if deadline is not None and time.perf_counter() > deadline:
                return GreedySolution(
                    success=False, indices=None, trajectories=None, total_cost=None,
                    failed_at=candidates.aircraft[i].id,
                    pair_checks=cache.misses, wall_s=time.perf_counter() - t0,
                    timed_out=True,
                )
            if all(
                check_pair_cached(cache, i, ti, j, tj, candidates, params)
                for j, tj in fixed
            ):
                found = ti
                break
        if found is None:
            return GreedySolution(
                success=False, indices=None, trajectories=None, total_cost=None,
                failed_at=candidates.aircraft[i].id,
                pair_checks=cache.misses, wall_s=time.perf_counter() - t0,
            )
        fixed.append((i, found))
        chosen[i] = found

    indices = tuple(chosen)
    total = math.fsum(candidates.trajectories[i][v].cost for i, v in enumerate(indices))
    return GreedySolution(
        success=True,
        indices=indices,
        trajectories=tuple(candidates.trajectories[i][v] for i, v in enumerate(indices)),
        total_cost=total,
        failed_at=None,
        pair_checks=cache.misses,
        wall_s=time.perf_counter() - t0,
    )
