import itertools
import math
import random

import pytest

import deconflict.sbf as sbf_mod
from deconflict.errors import ContractViolation, ResourceLimitError
from deconflict.model import SeparationParams
from deconflict.sbf import SolveStatus, solve_oracle, solve_sbf
from deconflict.separation import CompatibilityCache, compatible
from deconflict.trajgen import build_candidate_set

from conftest import (
    random_instance_mix,
    straight_trajectory,
    toy_candidates,
    two_by_two_candidates,
)

PARAMS = SeparationParams()


def test_single_aircraft_picks_cheapest():
    lst = [straight_trajectory(0, 0, 90, 400, 600, c) for c in (1.5, 2.0, 4.0)]
    cs = toy_candidates([lst], 600)
    res = solve_sbf(cs, PARAMS)
    assert res.status is SolveStatus.OPTIMAL
    assert res.solution.indices == (0,)
    assert res.solution.total_cost == 1.5


def test_two_by_two_example():
    cs = two_by_two_candidates()
    # independent check by enumerating all four pairs
    best = math.inf
    for i, j in itertools.product(range(2), range(2)):
        if compatible(cs.trajectories[0][i], cs.trajectories[1][j], PARAMS):
            best = min(best, cs.trajectories[0][i].cost + cs.trajectories[1][j].cost)
    assert best == 3.0

    res = solve_sbf(cs, PARAMS)
    assert res.status is SolveStatus.OPTIMAL
    assert res.solution.total_cost == 3.0
    assert res.solution.indices in ((0, 1), (1, 0))


def test_all_incompatible_no_solution():
    # everyone flies the same line
    a = [straight_trajectory(0, 0, 90, 400, 600, 1.0)]
    b = [straight_trajectory(30, 0, 90, 400, 600, 1.0)]
    c = [straight_trajectory(0, 2, 90, 400, 600, 1.0)]
    cs = toy_candidates([a, b, c], 600)
    res = solve_sbf(cs, PARAMS)
    assert res.status is SolveStatus.NO_SOLUTION
    assert res.solution is None
    assert solve_oracle(cs, PARAMS).status is SolveStatus.NO_SOLUTION


def test_oracle_equivalence_on_random_instances():
    for inst in random_instance_mix(8):
        cs = build_candidate_set(inst)
        fast = solve_sbf(cs, inst.separation)
        exact = solve_oracle(cs, inst.separation)
        assert fast.status == exact.status
        if fast.solution is not None:
            assert fast.solution.total_cost == exact.solution.total_cost


def test_popped_costs_are_non_decreasing(monkeypatch):
    original = sbf_mod.heappop
    total = 0
    for inst in random_instance_mix(4):
        popped = []

        def recording_heappop(heap, _sink=popped):
            entry = original(heap)
            _sink.append(entry[0])
            return entry

        monkeypatch.setattr(sbf_mod, "heappop", recording_heappop)
        cs = build_candidate_set(inst)
        res = solve_sbf(cs, inst.separation)
        assert res.status is SolveStatus.OPTIMAL
        assert all(a <= b + 1e-12 for a, b in zip(popped, popped[1:]))
        total += len(popped)
    assert total > 20


def test_lazy_checks_fewer_than_full_matrix():
    rng = random.Random(5)
    a = [straight_trajectory(0, rng.uniform(-3, 3), 90, 400, 600, 1.0 + 0.01 * k)
         for k in range(50)]
    b = [straight_trajectory(60, 20 + rng.uniform(-3, 3), 270, 400, 600, 1.0 + 0.01 * k)
         for k in range(50)]
    cs = toy_candidates([a, b], 600)
    cache = CompatibilityCache()
    res = solve_sbf(cs, PARAMS, cache=cache)
    assert res.status is SolveStatus.OPTIMAL
    full = 50 * 50
    assert res.stats.pair_checks < full
    assert len(cache) < full


def test_determinism():
    inst = random_instance_mix(3)[0]
    cs1 = build_candidate_set(inst)
    cs2 = build_candidate_set(inst)
    r1 = solve_sbf(cs1, inst.separation)
    r2 = solve_sbf(cs2, inst.separation)
    assert r1.solution.indices == r2.solution.indices
    assert r1.solution.total_cost == r2.solution.total_cost
    assert r1.stats.nodes_popped == r2.stats.nodes_popped
    assert r1.stats.pair_checks == r2.stats.pair_checks


def test_timeout_returns_stats():
    inst = random_instance_mix(4)[3]
    cs = build_candidate_set(inst)
    res = solve_sbf(cs, inst.separation, deadline_s=0.0, timeout_check_interval=1)
    assert res.status is SolveStatus.TIMEOUT
    assert res.solution is None
    assert res.stats.nodes_popped >= 1


def test_unsorted_domains_rejected():
    lst = [straight_trajectory(0, 0, 90, 400, 600, 2.0),
           straight_trajectory(0, 10, 90, 400, 600, 1.0)]
    cs = toy_candidates([lst], 600)
    with pytest.raises(ContractViolation):
        solve_sbf(cs, PARAMS)


def test_negative_costs_rejected():
    lst = [straight_trajectory(0, 0, 90, 400, 600, -1.0)]
    cs = toy_candidates([lst], 600)
    with pytest.raises(ContractViolation):
        solve_sbf(cs, PARAMS)


def test_upper_bound_prunes_equal_or_worse():
    cs = two_by_two_candidates()
    res = solve_sbf(cs, PARAMS, upper_bound=3.0)
    assert res.status is SolveStatus.NO_SOLUTION  # nothing strictly better
    res2 = solve_sbf(cs, PARAMS, upper_bound=3.0001)
    assert res2.status is SolveStatus.OPTIMAL
    assert res2.solution.total_cost == 3.0


def test_memory_limit_reported():
    # fully compatible 3 x 40 pool with near-tied costs floods a tiny frontier
    lists = [
        [straight_trajectory(0, 1000.0 * i + 10.0 * k, 90, 400, 600, 1.0 + 0.001 * k)
         for k in range(40)]
        for i in range(3)
    ]
    cs = toy_candidates(lists, 600)
    res = solve_sbf(cs, PARAMS, max_frontier=8)
    assert res.status is SolveStatus.MEMORY
    assert res.solution is None


def test_oracle_cap():
    inst = random_instance_mix(2)[0]
    cs = build_candidate_set(inst)
    with pytest.raises(ResourceLimitError):
        solve_oracle(cs, inst.separation, cap=10)


def test_oracle_lexicographic_tie_break():
    # two equal-cost compatible selections; the smaller index tuple wins
    a = [straight_trajectory(0, 0, 90, 400, 600, 1.0),
         straight_trajectory(0, 10, 90, 400, 600, 1.0)]
    b = [straight_trajectory(0, 40, 90, 400, 600, 2.0),
         straight_trajectory(0, 50, 90, 400, 600, 2.0)]
    cs = toy_candidates([a, b], 600)
    res = solve_oracle(cs, PARAMS)
    assert res.solution.indices == (0, 0)
