"""Minimum-cost joint trajectory selection.

``solve_sbf`` runs a best-first search over partial trajectory tuples kept in
a binary min-heap ordered by accumulated cost.  Compatibility edges are only
evaluated (and memoized) for the tuples the search actually visits, so the
first complete mutually-compatible tuple popped is a minimum-cost selection.

``solve_oracle`` is the testing oracle: exhaustive evaluation of the full
Cartesian candidate space with a dense compatibility relation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from heapq import heappop, heappush
from typing import List, Optional, Tuple

import numpy as np

from .errors import ContractViolation, ResourceLimitError
from .model import SeparationParams, Trajectory
from .separation import CompatibilityCache, build_matrix, check_pair_cached
from .trajgen import CandidateSet


class SolveStatus(Enum):
    OPTIMAL = "OPTIMAL"
    SOLUTION = "SOLUTION"  # feasible but not proven optimal
    NO_SOLUTION = "NO_SOLUTION"
    TIMEOUT = "TIMEOUT"
    MEMORY = "MEMORY"
    ERROR = "ERROR"


@dataclass
class SolveStats:
    nodes_popped: int = 0
    pair_checks: int = 0  # distance evaluations actually performed
    cache_hits: int = 0
    wall_s: float = 0.0
    peak_frontier: int = 0


@dataclass
class Solution:
    """A mutually compatible trajectory selection, one entry per aircraft in
    instance order."""

    indices: Tuple[int, ...]
    trajectories: Tuple[Trajectory, ...]
    total_cost: float
    optimal: bool


@dataclass
class SolveResult:
    status: SolveStatus
    solution: Optional[Solution]
    stats: SolveStats

    @property
    def solved(self) -> bool:
        return self.solution is not None


def _check_sorted_domains(candidates: CandidateSet) -> None:
    for i, lst in enumerate(candidates.trajectories):
        costs = [t.cost for t in lst]
        if any(c < 0 for c in costs):
            raise ContractViolation(f"aircraft {i} has a negative trajectory cost")
        if any(costs[k] > costs[k + 1] for k in range(len(costs) - 1)):
            raise ContractViolation(f"aircraft {i} domain is not sorted by ascending cost")


def _total_cost(candidates: CandidateSet, indices: Tuple[int, ...]) -> float:
    return math.fsum(
        candidates.trajectories[i][v].cost for i, v in enumerate(indices)
    )


def solve_sbf(
    candidates: CandidateSet,
    params: SeparationParams,
    deadline_s: Optional[float] = None,
    cache: Optional[CompatibilityCache] = None,
    upper_bound: Optional[float] = None,
    order_by: str = "domain_size",
    max_frontier: int = 3_000_000,
    timeout_check_interval: int = 1024,
) -> SolveResult:
    """Best-first minimum-cost selection with lazy compatibility checks.

    Nodes are (tab, index, cost) records: ``tab`` holds one trajectory index
    per aircraft (-1 when unassigned), ``index`` the active aircraft, ``cost``
    the accumulated cost of tab[0..index].  Expansion inserts the extension of
    a legal node (next aircraft at its cheapest trajectory) and, domain
    permitting, the sibling (same aircraft, next-cheapest trajectory).  With
    non-negative costs and sorted domains the popped costs are non-decreasing,
    so the first complete legal node is optimal.

    ``upper_bound`` makes the search give up as soon as the frontier minimum
    reaches that cost (used by the iterative deepening wrapper).
    """
    _check_sorted_domains(candidates)
    if cache is None:
        cache = CompatibilityCache()
    stats = SolveStats()
    t0 = time.perf_counter()
    deadline = None if deadline_s is None else t0 + deadline_s

    n = candidates.n_aircraft
    if any(len(lst) == 0 for lst in candidates.trajectories):
        stats.wall_s = time.perf_counter() - t0
        return SolveResult(SolveStatus.NO_SOLUTION, None, stats)
    if order_by == "domain_size":
        perm = sorted(range(n), key=lambda i: (len(candidates.trajectories[i]), i))
    elif order_by == "id":
        perm = list(range(n))
    else:
        raise ContractViolation(f"unknown order_by: {order_by!r}")
    domains = [candidates.trajectories[i] for i in perm]
    costs = [[t.cost for t in dom] for dom in domains]
    sizes = [len(dom) for dom in domains]

    def finish(status: SolveStatus, solution: Optional[Solution] = None) -> SolveResult:
        stats.wall_s = time.perf_counter() - t0
        stats.pair_checks = cache.misses
        stats.cache_hits = cache.hits
        return SolveResult(status, solution, stats)

    # Heap entries carry the cost of the node's assigned prefix without its
    # last term, so children and siblings extend the left-to-right cost sum
    # exactly (bit-identical to recomputing it) in O(1).
    tab0 = (0,) + (-1,) * (n - 1)
    heap: List[Tuple[float, int, Tuple[int, ...], float]] = [
        (costs[0][0], 0, tab0, 0.0)
    ]
    pops = 0

    while heap:
        cost, neg_index, tab, prefix = heappop(heap)
        index = -neg_index
        pops += 1
        if (
            deadline is not None
            and pops % timeout_check_interval == 0
            and time.perf_counter() > deadline
        ):
            stats.nodes_popped = pops
            return finish(SolveStatus.TIMEOUT)
        if upper_bound is not None and cost >= upper_bound:
            # Heap costs are non-decreasing: nothing cheaper remains.
            stats.nodes_popped = pops
            return finish(SolveStatus.NO_SOLUTION)

        legal = True
        for k in range(index):
            if not check_pair_cached(
                cache, perm[index], tab[index], perm[k], tab[k], candidates, params
            ):
                legal = False
                break

        if legal:
            if index == n - 1:
                stats.nodes_popped = pops
                chosen = [0] * n
                for pos, i in enumerate(perm):
                    chosen[i] = tab[pos]
                indices = tuple(chosen)
                solution = Solution(
                    indices=indices,
                    trajectories=tuple(
                        candidates.trajectories[i][v] for i, v in enumerate(indices)
                    ),
                    total_cost=_total_cost(candidates, indices),
                    optimal=True,
                )
                return finish(SolveStatus.OPTIMAL, solution)
            child = tab[: index + 1] + (0,) + tab[index + 2 :]
            child_cost = cost + costs[index + 1][0]
            if upper_bound is None or child_cost < upper_bound:
                heappush(heap, (child_cost, -(index + 1), child, cost))

        nxt = tab[index] + 1
        if nxt < sizes[index]:  # skip exhausted domains so the loop terminates
            sibling_cost = prefix + costs[index][nxt]
            if upper_bound is None or sibling_cost < upper_bound:
                sibling = tab[:index] + (nxt,) + tab[index + 1 :]
                heappush(heap, (sibling_cost, neg_index, sibling, prefix))

        if len(heap) > stats.peak_frontier:
            stats.peak_frontier = len(heap)
        if len(heap) > max_frontier:
            stats.nodes_popped = pops
            return finish(SolveStatus.MEMORY)

    stats.nodes_popped = pops
    return finish(SolveStatus.NO_SOLUTION)


def solve_oracle(
    candidates: CandidateSet,
    params: SeparationParams,
    cap: int = 10_000_000,
) -> SolveResult:
    """Exact optimum by exhaustive enumeration of all complete selections.

    Ties are broken toward the lexicographically smallest index tuple.  The
    Cartesian product size must stay within ``cap``.
    """
    sizes = candidates.domain_sizes
    n = len(sizes)
    total = math.prod(sizes)
    if total > cap:
        raise ResourceLimitError(f"oracle space {total} exceeds the cap of {cap}")

    t0 = time.perf_counter()
    stats = SolveStats()
    if total == 0:
        return SolveResult(SolveStatus.NO_SOLUTION, None, stats)

    cost_arrays = [
        np.array([t.cost for t in lst], dtype=float) for lst in candidates.trajectories
    ]

    if n == 1:
        best = int(np.argmin(cost_arrays[0]))
        indices = (best,)
        solution = Solution(
            indices=indices,
            trajectories=(candidates.trajectories[0][best],),
            total_cost=_total_cost(candidates, indices),
            optimal=True,
        )
        stats.wall_s = time.perf_counter() - t0
        return SolveResult(SolveStatus.OPTIMAL, solution, stats)

    matrix = build_matrix(candidates, params, budget=cap)
    stats.pair_checks = matrix.total_checks

    best_cost = math.inf
    best_indices: Optional[Tuple[int, ...]] = None

    def scan_block(prefix: Tuple[int, ...], a: int, b: int):
        """Minimum over the last two axes for a fixed prefix assignment."""
        nonlocal best_cost, best_indices
        feas = matrix.blocks[(a, b)].copy()
        for pos, v in enumerate(prefix):
            feas &= matrix.blocks[(pos, a)][v][:, None]
            feas &= matrix.blocks[(pos, b)][v][None, :]
        if not feas.any():
            return
        grid = cost_arrays[a][:, None] + cost_arrays[b][None, :]
        for pos, v in enumerate(prefix):
            grid = grid + cost_arrays[pos][v]
        grid = np.where(feas, grid, np.inf)
        flat = int(np.argmin(grid))
        value = float(grid.flat[flat])
        if value < best_cost:
            best_cost = value
            best_indices = prefix + (flat // feas.shape[1], flat % feas.shape[1])

    a, b = n - 2, n - 1
    if n == 2:
        scan_block((), a, b)
    else:
        prefix_sizes = sizes[: n - 2]
        for flat_prefix in range(math.prod(prefix_sizes)):
            rem = flat_prefix
            prefix = []
            for s in reversed(prefix_sizes):
                prefix.append(rem % s)
                rem //= s
            prefix = tuple(reversed(prefix))
            ok = True
            for i in range(len(prefix)):
                for j in range(i + 1, len(prefix)):
                    if not matrix.blocks[(i, j)][prefix[i], prefix[j]]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                scan_block(prefix, a, b)

    stats.wall_s = time.perf_counter() - t0
    if best_indices is None:
        return SolveResult(SolveStatus.NO_SOLUTION, None, stats)
    solution = Solution(
        indices=best_indices,
        trajectories=tuple(
            candidates.trajectories[i][v] for i, v in enumerate(best_indices)
        ),
        total_cost=_total_cost(candidates, best_indices),
        optimal=True,
    )
    return SolveResult(SolveStatus.OPTIMAL, solution, stats)
