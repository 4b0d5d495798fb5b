"""Acceptance suite.

Each test exercises one acceptance criterion end to end at its stated
tolerance and prints one PASS/FAIL line.  Run with ``pytest -s
tests/test_acceptance.py`` to see the lines as they complete.  The two
checks that need an external wcsp solver binary skip cleanly when none is
installed.
"""

import math
import shutil
import statistics
import time
from dataclasses import replace

import pytest

from deconflict.bench import (
    ScenarioKind,
    ScenarioSpec,
    derive_seed,
    iterate_anytime,
    make_instance,
    make_roundabout,
    run_campaign,
)
from deconflict.greedy import solve_greedy
from deconflict.model import (
    AircraftSpec,
    AircraftState,
    DiscretisationParams,
    ManoeuvreOrder,
    SeparationParams,
)
from deconflict.sbf import SolveStatus, solve_oracle, solve_sbf
from deconflict.separation import compatible, min_distance
from deconflict.trajgen import (
    ManoeuvreCatalog,
    build_candidate_set,
    build_catalog,
    count_bound,
    generate,
)
from deconflict.wcsp import (
    ExternalStatus,
    export_wcsp,
    formalize_wcsp,
    parse_wcsp,
    run_external_solver,
    wcsp_exhaustive_optimum,
)

from conftest import default_perf, fine_min_distance, random_instance_mix

EXTERNAL_SOLVER = shutil.which("toulbar2")
TIMEOUT_S = 60.0


def _report(criterion: int, label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion}] {status} — {label}" + (f": {detail}" if detail else ""))
    assert ok, f"criterion {criterion} ({label}): {detail}"


# --------------------------------------------------------------------------
# Shared corpus: 100 randomized small instances solved by all three methods.
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus():
    instances = random_instance_mix(100)
    entries = []
    t0 = time.perf_counter()
    for inst in instances:
        candidates = build_candidate_set(inst)
        exact = solve_oracle(candidates, inst.separation)
        fast = solve_sbf(candidates, inst.separation, deadline_s=TIMEOUT_S)
        greedy = solve_greedy(candidates, inst.separation)
        entries.append(
            dict(instance=inst, candidates=candidates, oracle=exact,
                 sbf=fast, greedy=greedy)
        )
    elapsed = time.perf_counter() - t0
    return dict(entries=entries, elapsed_s=elapsed)


def test_criterion_1_oracle_equivalence(corpus):
    entries = corpus["entries"]
    assert len(entries) >= 100
    solved = 0
    for e in entries:
        candidates = e["candidates"]
        assert max(candidates.domain_sizes) <= 300
        assert 2 <= candidates.n_aircraft <= 4
        exact, fast, greedy = e["oracle"], e["sbf"], e["greedy"]
        assert fast.status == exact.status, "sbf and oracle must agree on solvability"
        if exact.solution is not None:
            solved += 1
            assert fast.solution.total_cost == exact.solution.total_cost, (
                f"sbf {fast.solution.total_cost!r} != oracle "
                f"{exact.solution.total_cost!r}"
            )
            if greedy.success:
                assert greedy.total_cost >= exact.solution.total_cost - 1e-12
    kinds = {e["instance"].aircraft[0].initial.heading for e in entries}
    assert len(kinds) > 10  # geometry really varies across seeds
    ok = corpus["elapsed_s"] < 120.0
    _report(
        1, "sbf total equals oracle optimum on randomized instances", ok and solved > 50,
        f"{len(entries)} instances ({solved} solvable) in {corpus['elapsed_s']:.1f}s",
    )


def test_criterion_2_count_bound(corpus):
    for e in corpus["entries"]:
        d = e["instance"].discretisation
        n_reported = build_catalog(d.granularity).n_reported
        bound = count_bound(d.segments, d.max_manoeuvres, n_reported)
        for stats in e["candidates"].stats:
            assert stats.legal <= bound, (
                f"legal {stats.legal} exceeds bound {bound} at "
                f"p={d.segments} m={d.max_manoeuvres} g={d.granularity}"
            )

    # wide-turn preset: 6 segments, up to 3 orders from {+-20, +-40} degrees
    initial = AircraftState(0.0, 0.0, 135.0, 450.0)
    final = AircraftState(42.43, -42.43, 135.0, 450.0)
    spec = AircraftSpec(0, initial, final, default_perf(450.0, a_max=2.5,
                                                        v_min=250.0, v_max=650.0))
    catalog = ManoeuvreCatalog(
        tuple(ManoeuvreOrder.turn(d) for d in (20.0, -20.0, 40.0, -40.0))
    )
    period = 1.2 * 60.0 / 450.0 * 3600.0
    trajs = generate(spec, DiscretisationParams(6, 3, 1), period, catalog=catalog)
    bound = count_bound(6, 3, 4)
    ok = 300 <= len(trajs) <= bound == 1280
    _report(2, "legal counts within the combinatorial bound", ok,
            f"wide-turn preset: {len(trajs)} legal in [300, 1280]")


TABLE_SETTINGS = [
    DiscretisationParams(p, 2, 2) for p in (4, 5, 6, 7, 8)
]
TABLE_MEANS = {4: 785.47, 5: 1761.61, 6: 3478.37, 7: 5930.66, 8: 9409.97}


def test_criterion_3_catalog_and_count_ordering():
    assert build_catalog(2).n_reported == 17
    assert build_catalog(3).n_reported == 33

    spec = ScenarioSpec(kind=ScenarioKind.ROUNDABOUT, n_aircraft=3, seed=1234)
    means = {}
    for params in TABLE_SETTINGS:
        records = run_campaign(spec, [params], ["greedy"], runs=100,
                               timeout_s=TIMEOUT_S)
        sizes = [r.traj_per_ac for r in records if r.traj_per_ac > 0]
        means[params.segments] = statistics.mean(sizes)

    ordered = all(
        means[p1] < means[p2]
        for p1, p2 in zip((4, 5, 6, 7), (5, 6, 7, 8))
    )
    in_band = all(
        0.5 * TABLE_MEANS[p] <= means[p] <= 1.5 * TABLE_MEANS[p]
        for p in means
    )
    detail = ", ".join(f"p={p}: {means[p]:.0f}" for p in sorted(means))
    _report(3, "catalog sizes 17/33 and mean legal-count ordering", ordered and in_band,
            detail)


ALL_TABLE_ROWS = [
    (4, 2, 2), (5, 2, 2), (4, 3, 2), (6, 2, 2), (7, 2, 2), (8, 2, 2),
    (6, 2, 3), (4, 3, 3), (7, 2, 3),
]


def test_criterion_4a_sbf_optimal_at_every_setting():
    spec = ScenarioSpec(kind=ScenarioKind.ROUNDABOUT, n_aircraft=3, seed=1)
    results = []
    for (p, m, g) in ALL_TABLE_ROWS:
        inst = make_roundabout(spec, DiscretisationParams(p, m, g))
        candidates = build_candidate_set(inst)
        res = solve_sbf(candidates, inst.separation, deadline_s=TIMEOUT_S,
                        max_frontier=6_000_000)
        results.append(((p, m, g), res.status, res.stats.wall_s,
                        candidates.mean_legal_per_aircraft))
    ok = all(status is SolveStatus.OPTIMAL and wall <= TIMEOUT_S
             for _, status, wall, _ in results)
    worst = max(results, key=lambda r: r[2])
    _report(4, "3-aircraft sweep: optimal at every discretisation setting", ok,
            f"worst {worst[0]} in {worst[2]:.1f}s at {worst[3]:.0f} traj/ac")


def test_criterion_4b_aircraft_sweep_crossover():
    runs = 3
    sweep = DiscretisationParams(5, 2, 2)
    censored = {}
    success = {}
    for n in range(3, 9):
        spec = ScenarioSpec(kind=ScenarioKind.ROUNDABOUT, n_aircraft=n, seed=4242)
        records = run_campaign(spec, [sweep], ["sbf"], runs=runs,
                               timeout_s=TIMEOUT_S)
        times = [
            r.solve_s if r.outcome is SolveStatus.OPTIMAL else TIMEOUT_S
            for r in records
        ]
        censored[n] = statistics.median(times)
        success[n] = sum(r.outcome is SolveStatus.OPTIMAL for r in records) / runs

    # strictly increasing below the timeout ceiling; ties only at the ceiling
    ordered = True
    for a, b in zip(range(3, 8), range(4, 9)):
        if censored[a] >= TIMEOUT_S:
            ordered = ordered and censored[b] >= TIMEOUT_S
        else:
            ordered = ordered and censored[a] < censored[b]
    dropped = success[8] < 0.5
    detail = ", ".join(
        f"n={n}: med {censored[n]:.2f}s ({success[n]:.0%})" for n in sorted(censored)
    )
    _report(4, "aircraft sweep: median time rises and success collapses", ordered and dropped,
            detail)

    if EXTERNAL_SOLVER is None:
        print("[criterion 4] SKIP — external-solver half: no solver binary installed")
        return
    spec = ScenarioSpec(kind=ScenarioKind.ROUNDABOUT, n_aircraft=6, seed=4242)
    records = run_campaign(spec, [sweep], ["external"], runs=runs,
                           timeout_s=TIMEOUT_S, solver_path=EXTERNAL_SOLVER)
    rate = sum(r.outcome is SolveStatus.OPTIMAL for r in records) / runs
    _report(4, "external solver holds 90% success at 6 aircraft", rate >= 0.9,
            f"success {rate:.0%}")


def test_criterion_5_wcsp_consistency(corpus, tmp_path):
    checked = 0
    for k, e in enumerate(corpus["entries"]):
        inst, candidates = e["instance"], e["candidates"]
        wcsp = formalize_wcsp(candidates, inst.separation, scale=1000)
        path = export_wcsp(wcsp, tmp_path / f"c{k}.wcsp")
        name, parsed = parse_wcsp(path, scale=1000)
        assert parsed == wcsp and name == f"c{k}"
        again = export_wcsp(parsed, tmp_path / f"c{k}_again.wcsp", name=name)
        assert again.read_bytes() == path.read_bytes()
        path.unlink()
        again.unlink()

        best = wcsp_exhaustive_optimum(wcsp)
        oracle = e["oracle"]
        n = candidates.n_aircraft
        if oracle.solution is None:
            assert best is None
        else:
            assert best is not None
            target = round(1000 * oracle.solution.total_cost)
            assert abs(best[0] - target) <= n, (
                f"wcsp optimum {best[0]} vs scaled oracle {target}"
            )
            if EXTERNAL_SOLVER is not None:
                path = export_wcsp(wcsp, tmp_path / f"e{k}.wcsp")
                res = run_external_solver(path, EXTERNAL_SOLVER, TIMEOUT_S,
                                          n_variables=n)
                assert res.status is ExternalStatus.OK
                assert abs(res.optimum - target) <= n
                path.unlink()
        checked += 1
    suffix = "" if EXTERNAL_SOLVER else " (external check skipped: no binary)"
    _report(5, "wcsp export round-trips and matches the oracle", checked == len(corpus["entries"]),
            f"{checked} instances{suffix}")


def test_criterion_6_greedy_beyond_limits():
    spec = ScenarioSpec(kind=ScenarioKind.ROUNDABOUT, n_aircraft=20, seed=2024)

    coarse = make_roundabout(spec, DiscretisationParams(4, 1, 2))
    cs_coarse = build_candidate_set(coarse)
    assert cs_coarse.mean_legal_per_aircraft <= 100

    # the benchmark must be genuinely conflicted on direct paths
    directs = [next(t for t in lst if len(t.orders) == 1)
               for lst in cs_coarse.trajectories]
    conflicts = sum(
        1
        for i in range(20)
        for j in range(i + 1, 20)
        if not compatible(directs[i], directs[j], coarse.separation)
    )
    assert conflicts > 0

    fine = make_roundabout(spec, DiscretisationParams(8, 2, 2))
    t0 = time.perf_counter()
    cs_fine = build_candidate_set(fine)
    greedy_fine = solve_greedy(cs_fine, fine.separation)
    fine_wall = time.perf_counter() - t0
    assert cs_fine.mean_legal_per_aircraft >= 5000
    assert greedy_fine.success
    assert greedy_fine.wall_s <= TIMEOUT_S

    # Optimum at the coarse setting.  Best-first tuple search floods beyond
    # 6-7 aircraft, so when it cannot finish we fall back to the certified
    # lower bound: no selection can cost less than the sum of each
    # aircraft's cheapest trajectory.
    greedy_coarse = solve_greedy(cs_coarse, coarse.separation)
    attempt = solve_sbf(
        cs_coarse, coarse.separation, deadline_s=TIMEOUT_S,
        upper_bound=greedy_coarse.total_cost if greedy_coarse.success else None,
        max_frontier=4_000_000,
    )
    lower_bound = math.fsum(lst[0].cost for lst in cs_coarse.trajectories)
    if attempt.status is SolveStatus.OPTIMAL:
        baseline = attempt.solution.total_cost
        baseline_kind = "sbf optimum"
    elif attempt.status is SolveStatus.NO_SOLUTION and greedy_coarse.success:
        baseline = greedy_coarse.total_cost  # proven optimal by exhaustion
        baseline_kind = "greedy cost proven optimal"
    else:
        baseline = lower_bound
        baseline_kind = f"certified lower bound (sbf {attempt.status.value.lower()})"

    ok = greedy_fine.total_cost < baseline
    _report(
        6, "rich-pool greedy beats the coarse-setting optimum", ok,
        f"greedy {greedy_fine.total_cost:.2f} kg at "
        f"{cs_fine.mean_legal_per_aircraft:.0f} traj/ac (gen+solve {fine_wall:.1f}s) "
        f"< {baseline:.2f} kg [{baseline_kind}, {conflicts} conflicting direct pairs]",
    )


def test_criterion_7_anytime_contract():
    schedule = [
        DiscretisationParams(2, 1, 1),
        DiscretisationParams(3, 1, 2),
        DiscretisationParams(4, 2, 2),
    ]
    checked = 0
    for k in range(20):
        kind = ScenarioKind.ROUNDABOUT if k % 2 == 0 else ScenarioKind.CROSSING
        spec = ScenarioSpec(kind=kind, n_aircraft=2 + k % 3, seed=derive_seed(555, k))
        inst = make_instance(spec, schedule[0])
        result = iterate_anytime(inst, schedule, budget_s=30.0)
        costs = [rec.cost_kg for rec in result.log if rec.cost_kg is not None]
        assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:])), costs
        if result.best is not None:
            assert result.best.total_cost == min(costs)
        # interrupting at any budget returns the incumbent reached so far
        for budget in (0.0, 0.05):
            partial = iterate_anytime(inst, schedule, budget_s=budget)
            if partial.best is not None:
                partial_costs = [r.cost_kg for r in partial.log if r.cost_kg is not None]
                assert partial.best.total_cost == min(partial_costs)
        checked += 1
    _report(7, "anytime incumbents are monotone and always returnable", checked == 20,
            f"{checked} instances, 3-step schedule")


def test_criterion_8_separation_soundness():
    import random as pyrandom

    rng = pyrandom.Random(99)
    pool = []
    for inst in random_instance_mix(6, base_seed=90_210):
        cs = build_candidate_set(inst)
        pool.append((inst, cs))

    worst_gap = 0.0
    checked = 0
    while checked < 1000:
        inst, cs = pool[checked % len(pool)]
        i, j = rng.sample(range(cs.n_aircraft), 2)
        a = cs.trajectories[i][rng.randrange(len(cs.trajectories[i]))]
        b = cs.trajectories[j][rng.randrange(len(cs.trajectories[j]))]
        params = inst.separation
        coarse = min_distance(a, b, params)
        fine = fine_min_distance(a, b, step=0.01)
        v_max = max(inst.aircraft[i].perf.v_max, inst.aircraft[j].perf.v_max)
        bound = 2.0 * v_max * params.sample_step / 3600.0
        gap = coarse - fine
        assert gap >= -1e-9, "sampled minimum must not undershoot the fine grid"
        assert gap <= bound, f"sampling gap {gap:.4f} NM exceeds bound {bound:.4f} NM"
        worst_gap = max(worst_gap, gap)
        assert compatible(a, b, params) == compatible(b, a, params)
        checked += 1
    _report(8, "sampling error within the speed bound and symmetric checks", checked == 1000,
            f"worst gap {worst_gap:.4f} NM over {checked} pairs")
