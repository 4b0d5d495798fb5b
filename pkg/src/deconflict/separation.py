"""Pairwise trajectory compatibility.

Two trajectories are compatible when their time-synchronized horizontal
distance never drops below the separation minimum plus the safety margin.
Distances are evaluated on a fixed time grid; the margin absorbs the
sampling error (bounded by 2 * v_max * step / 3600 NM).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import ContractViolation, DomainError, ResourceLimitError
from .model import SeparationParams, Trajectory, position_at_array
from .trajgen import CandidateSet

_PERIOD_TOL = 1e-6

try:  # jit'd hot path for the solvers; numpy fallback is semantically identical
    from numba import njit

    @njit(cache=True, fastmath=False)
    def _tracks_conflict(ta: np.ndarray, tb: np.ndarray, thr2: float) -> bool:
        for k in range(ta.shape[0]):
            dx = ta[k, 0] - tb[k, 0]
            dy = ta[k, 1] - tb[k, 1]
            if dx * dx + dy * dy < thr2:
                return True
        return False

except ImportError:  # pragma: no cover - numba is normally present
    def _tracks_conflict(ta: np.ndarray, tb: np.ndarray, thr2: float) -> bool:
        d = ta - tb
        return bool((d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]).min() < thr2)


def _sample_times(period_s: float, step: float) -> np.ndarray:
    ts = np.arange(0.0, period_s, step)
    if ts.size == 0 or period_s - ts[-1] > 1e-9:
        ts = np.append(ts, period_s)
    else:
        ts[-1] = period_s
    return ts


def sampled_track(traj: Trajectory, step: float) -> np.ndarray:
    """Positions of the trajectory on the sampling grid, memoized per step."""
    key = round(step, 9)
    track = traj._tracks.get(key)
    if track is None:
        track = position_at_array(traj, _sample_times(traj.arrival_time, step))
        traj._tracks[key] = track
    return track


def min_distance(a: Trajectory, b: Trajectory, params: SeparationParams) -> float:
    """Minimum sampled horizontal distance (NM) between the two aircraft."""
    if abs(a.arrival_time - b.arrival_time) > _PERIOD_TOL:
        raise DomainError(
            f"trajectories span different periods: {a.arrival_time} vs {b.arrival_time}"
        )
    ta = sampled_track(a, params.sample_step)
    tb = sampled_track(b, params.sample_step)
    d = ta - tb
    d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
    return float(np.sqrt(d2.min()))


def compatible(a: Trajectory, b: Trajectory, params: SeparationParams) -> bool:
    if abs(a.arrival_time - b.arrival_time) > _PERIOD_TOL:
        raise DomainError(
            f"trajectories span different periods: {a.arrival_time} vs {b.arrival_time}"
        )
    thr = params.threshold
    return not _tracks_conflict(
        sampled_track(a, params.sample_step),
        sampled_track(b, params.sample_step),
        thr * thr,
    )


@dataclass
class CompatibilityCache:
    """Memo table of pair-compatibility results, keyed canonically so that
    (i, ti, j, tj) and (j, tj, i, ti) share one entry."""

    entries: Dict[Tuple[int, int, int, int], bool] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    def __len__(self) -> int:
        return len(self.entries)


def check_pair_cached(
    cache: CompatibilityCache,
    i: int,
    ti: int,
    j: int,
    tj: int,
    candidates: CandidateSet,
    params: SeparationParams,
) -> bool:
    """Compatibility of trajectory ti of aircraft i with tj of aircraft j,
    computed at most once per unordered pair."""
    if i == j:
        raise ContractViolation(f"pair check requires distinct aircraft, got i=j={i}")
    if i > j:
        i, j, ti, tj = j, i, tj, ti
    key = (i, ti, j, tj)
    hit = cache.entries.get(key)
    if hit is not None:
        cache.hits += 1
        return hit
    value = compatible(candidates.trajectories[i][ti], candidates.trajectories[j][tj], params)
    cache.entries[key] = value
    cache.misses += 1
    return value


@dataclass
class CompatibilityMatrix:
    """Dense pairwise compatibility for every aircraft pair."""

    blocks: Dict[Tuple[int, int], np.ndarray]  # (i, j) with i < j -> bool (t_i, t_j)
    total_checks: int
    elapsed_s: float

    def get(self, i: int, ti: int, j: int, tj: int) -> bool:
        if i > j:
            i, j, ti, tj = j, i, tj, ti
        return bool(self.blocks[(i, j)][ti, tj])


def build_matrix(
    candidates: CandidateSet,
    params: SeparationParams,
    budget: int = 50_000_000,
    deadline_s: float | None = None,
    block_elements: int = 4_000_000,
) -> CompatibilityMatrix:
    """Evaluate the full compatibility relation for every aircraft pair.

    Raises ResourceLimitError when the projected number of checks exceeds the
    budget (callers may fall back to lazy checking) or when the deadline
    expires mid-build.
    """
    sizes = candidates.domain_sizes
    n = len(sizes)
    projected = candidates.total_pair_products
    if projected > budget:
        raise ResourceLimitError(
            f"projected {projected} pair checks exceed the budget of {budget}"
        )
    t0 = time.perf_counter()
    thr2 = params.threshold * params.threshold
    blocks: Dict[Tuple[int, int], np.ndarray] = {}
    for i in range(n):
        track_i = np.stack(
            [sampled_track(tr, params.sample_step) for tr in candidates.trajectories[i]]
        )
        for j in range(i + 1, n):
            track_j = np.stack(
                [sampled_track(tr, params.sample_step) for tr in candidates.trajectories[j]]
            )
            ti, tj = sizes[i], sizes[j]
            k = track_j.shape[1]
            rows = max(1, block_elements // max(1, tj * k))
            out = np.empty((ti, tj), dtype=bool)
            for lo in range(0, ti, rows):
                hi = min(lo + rows, ti)
                if deadline_s is not None and time.perf_counter() - t0 > deadline_s:
                    raise ResourceLimitError("compatibility matrix build hit its deadline")
                diff = track_i[lo:hi, None, :, :] - track_j[None, :, :, :]
                d2 = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]
                out[lo:hi] = d2.min(axis=2) >= thr2
            blocks[(i, j)] = out
    return CompatibilityMatrix(
        blocks=blocks,
        total_checks=projected,
        elapsed_s=time.perf_counter() - t0,
    )
