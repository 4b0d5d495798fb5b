"""Command-line interface.

Subcommands: ``gen`` (write a scenario instance file), ``solve`` (run one
method on an instance), ``export-wcsp``, ``solve-external``, ``bench``
(noise-loop campaigns with CSV output and optional figures), ``iterate``
(anytime deepening) and ``report`` (render figures from a campaign CSV).

Exit codes: 0 solved/completed, 2 no solution, 3 timeout, 4 input error,
5 resource or external-solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from . import report as report_mod
from .errors import (
    DeconflictError,
    InstanceFormatError,
    ParameterError,
    ResourceLimitError,
    UnsolvableInstanceError,
)
from .greedy import solve_greedy
from .instancefile import load_instance, save_instance
from .model import DiscretisationParams
from .sbf import SolveStatus, solve_oracle, solve_sbf
from .separation import CompatibilityCache
from .trajgen import build_candidate_set
from .wcsp import ExternalStatus, export_wcsp, formalize_wcsp, run_external_solver

EXIT_OK = 0
EXIT_NO_SOLUTION = 2
EXIT_TIMEOUT = 3
EXIT_INPUT = 4
EXIT_RESOURCE = 5

_STATUS_EXIT = {
    SolveStatus.OPTIMAL: EXIT_OK,
    SolveStatus.SOLUTION: EXIT_OK,
    SolveStatus.NO_SOLUTION: EXIT_NO_SOLUTION,
    SolveStatus.TIMEOUT: EXIT_TIMEOUT,
    SolveStatus.MEMORY: EXIT_RESOURCE,
    SolveStatus.ERROR: EXIT_RESOURCE,
}


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True,
                        choices=[k.value for k in bench_mod.ScenarioKind])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--radius", type=float, default=30.0,
                        help="roundabout circle radius (NM)")
    parser.add_argument("--angle", type=float, default=90.0,
                        help="crossing angle between the airways (degrees)")
    parser.add_argument("--spacing", type=float, default=8.0,
                        help="in-trail spacing (NM)")
    parser.add_argument("--base-speed", type=float, default=450.0)
    parser.add_argument("--noise-pos", type=float, default=1.0)
    parser.add_argument("--noise-speed", type=float, default=None)


def _add_disc_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--segments", type=int, required=True)
    parser.add_argument("--manoeuvres", type=int, required=True)
    parser.add_argument("--granularity", type=int, required=True)


def _scenario_spec(args, n_aircraft: int) -> bench_mod.ScenarioSpec:
    return bench_mod.ScenarioSpec(
        kind=bench_mod.ScenarioKind(args.scenario),
        n_aircraft=n_aircraft,
        seed=args.seed,
        radius=args.radius,
        crossing_angle=args.angle,
        spacing=args.spacing,
        base_speed=args.base_speed,
        noise_pos=args.noise_pos,
        noise_speed=args.noise_speed,
    )


def _cmd_gen(args) -> int:
    spec = _scenario_spec(args, args.aircraft)
    disc = DiscretisationParams(args.segments, args.manoeuvres, args.granularity)
    inst = bench_mod.make_instance(spec, disc)
    save_instance(inst, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = load_instance(args.infile)
    t0 = time.perf_counter()
    candidates = build_candidate_set(inst)
    gen_s = time.perf_counter() - t0

    cache = CompatibilityCache()
    if args.method == "sbf":
        res = solve_sbf(candidates, inst.separation, deadline_s=args.timeout, cache=cache)
        status, solution = res.status, res.solution
        solve_s, checks = res.stats.wall_s, res.stats.pair_checks
    elif args.method == "oracle":
        res = solve_oracle(candidates, inst.separation)
        status, solution = res.status, res.solution
        solve_s, checks = res.stats.wall_s, res.stats.pair_checks
    else:
        sol = solve_greedy(candidates, inst.separation, cache=cache, deadline_s=args.timeout)
        solve_s, checks = sol.wall_s, sol.pair_checks
        if sol.timed_out:
            status, solution = SolveStatus.TIMEOUT, None
        elif sol.success:
            from .sbf import Solution

            status = SolveStatus.SOLUTION
            solution = Solution(sol.indices, sol.trajectories, sol.total_cost, False)
        else:
            status, solution = SolveStatus.NO_SOLUTION, None

    if args.json:
        payload = {
            "status": status.value,
            "method": args.method,
            "gen_s": gen_s,
            "solve_s": solve_s,
            "pair_checks": checks,
            "trajectories_per_aircraft": candidates.mean_legal_per_aircraft,
        }
        if solution is not None:
            payload["cost_kg"] = solution.total_cost
            payload["selection"] = [
                {
                    "aircraft": candidates.aircraft[i].id,
                    "trajectory": solution.indices[i],
                    "orders": solution.trajectories[i].describe_orders(),
                }
                for i in range(candidates.n_aircraft)
            ]
        print(json.dumps(payload, indent=2))
    else:
        print(f"method {args.method}: {status.value}  "
              f"(generation {gen_s:.2f}s, solving {solve_s:.2f}s, "
              f"{checks} pair checks)")
        if solution is not None:
            print(f"total cost: {solution.total_cost:.3f} kg")
            for i in range(candidates.n_aircraft):
                print(f"  aircraft {candidates.aircraft[i].id}: "
                      f"{solution.trajectories[i].describe_orders()}")
    return _STATUS_EXIT[status]


def _cmd_export_wcsp(args) -> int:
    inst = load_instance(args.infile)
    candidates = build_candidate_set(inst)
    ub = None
    if args.ub_from_greedy:
        sol = solve_greedy(candidates, inst.separation)
        if sol.success:
            ub = sol.total_cost
            print(f"greedy upper bound: {ub:.3f} kg")
        else:
            print("greedy found no solution; exporting without an upper bound")
    wcsp = formalize_wcsp(
        candidates, inst.separation, known_upper_bound=ub, scale=args.scale
    )
    export_wcsp(wcsp, args.out)
    print(f"wrote {args.out} ({wcsp.n_variables} variables, top={wcsp.top})")
    return EXIT_OK


def _cmd_solve_external(args) -> int:
    inst = load_instance(args.infile)
    candidates = build_candidate_set(inst)
    wcsp = formalize_wcsp(candidates, inst.separation)
    import tempfile

    with tempfile.NamedTemporaryFile(suffix=".wcsp", delete=False) as fh:
        tmp = Path(fh.name)
    try:
        export_wcsp(wcsp, tmp)
        res = run_external_solver(tmp, args.solver, args.timeout,
                                  n_variables=wcsp.n_variables)
    finally:
        tmp.unlink(missing_ok=True)
    if res.status is ExternalStatus.OK:
        print(f"external optimum: {res.optimum} (scaled); "
              f"{res.optimum / wcsp.scale:.3f} kg in {res.wall_s:.2f}s")
        if res.assignment:
            print(f"assignment: {' '.join(map(str, res.assignment))}")
        return EXIT_OK
    print(f"external solver {res.status.value}: {res.detail}")
    return EXIT_TIMEOUT if res.status is ExternalStatus.TIMEOUT else EXIT_RESOURCE


def _parse_range(text: str):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return range(int(lo), int(hi) + 1)
    return [int(text)]


def _cmd_bench(args) -> int:
    disc = DiscretisationParams(args.segments, args.manoeuvres, args.granularity)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    records = []
    for n in _parse_range(args.aircraft):
        spec = _scenario_spec(args, n)
        records.extend(
            bench_mod.run_campaign(
                spec, [disc], methods, runs=args.runs, timeout_s=args.timeout,
                solver_path=args.solver,
            )
        )
    bench_mod.write_csv(records, args.csv)
    print(f"wrote {len(records)} records to {args.csv}")
    for row in bench_mod.aggregate(records):
        solve = f"{row.mean_solve_s:.2f}s" if row.mean_solve_s is not None else "-"
        traj = f"{row.mean_traj_per_ac:.0f}" if row.mean_traj_per_ac else "-"
        print(f"  {row.scenario} n={row.n_aircraft} "
              f"p={row.params.segments} m={row.params.max_manoeuvres} "
              f"g={row.params.granularity} {row.method}: "
              f"success {row.success_rate:.0%}, mean solve {solve}, "
              f"mean traj/ac {traj}")
    if args.plots:
        written = report_mod.render_report(args.csv, args.plots)
        for path in written:
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_iterate(args) -> int:
    inst = load_instance(args.infile)
    if args.schedule:
        schedule = []
        for chunk in args.schedule.split(";"):
            p, m, g = (int(x) for x in chunk.split(","))
            schedule.append(DiscretisationParams(p, m, g))
    else:
        schedule = bench_mod.default_schedule()
    result = bench_mod.iterate_anytime(inst, schedule, budget_s=args.budget)
    for rec in result.log:
        cost = f"{rec.cost_kg:.3f} kg" if rec.cost_kg is not None else "-"
        print(f"  p={rec.params.segments} m={rec.params.max_manoeuvres} "
              f"g={rec.params.granularity} [{rec.method}] {rec.status.value}: "
              f"{cost} in {rec.elapsed_s:.2f}s "
              f"({rec.traj_per_ac:.0f} traj/ac)")
    if result.best is not None:
        print(f"best: {result.best.total_cost:.3f} kg "
              f"({'optimal at last setting' if result.best.optimal else 'incumbent'})")
        return EXIT_OK
    print("no solution within budget")
    return EXIT_NO_SOLUTION


def _cmd_report(args) -> int:
    written = report_mod.render_report(args.csv, args.out_dir)
    if not written:
        print("no applicable figures for this CSV")
        return EXIT_NO_SOLUTION
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deconflict",
        description="Aircraft conflict resolution by discretised-manoeuvre "
                    "trajectory selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a scenario instance file")
    _add_scenario_args(p_gen)
    p_gen.add_argument("--aircraft", type=int, required=True)
    _add_disc_args(p_gen)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(fn=_cmd_gen)

    p_solve = sub.add_parser("solve", help="solve an instance file")
    p_solve.add_argument("--in", dest="infile", required=True)
    p_solve.add_argument("--method", choices=["sbf", "greedy", "oracle"], required=True)
    p_solve.add_argument("--timeout", type=float, default=60.0)
    p_solve.add_argument("--json", action="store_true")
    p_solve.set_defaults(fn=_cmd_solve)

    p_exp = sub.add_parser("export-wcsp", help="write the instance as a .wcsp file")
    p_exp.add_argument("--in", dest="infile", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--ub-from-greedy", action="store_true")
    p_exp.add_argument("--scale", type=int, default=1000)
    p_exp.set_defaults(fn=_cmd_export_wcsp)

    p_ext = sub.add_parser("solve-external", help="solve via an external wcsp solver")
    p_ext.add_argument("--in", dest="infile", required=True)
    p_ext.add_argument("--solver", required=True)
    p_ext.add_argument("--timeout", type=float, default=60.0)
    p_ext.set_defaults(fn=_cmd_solve_external)

    p_bench = sub.add_parser("bench", help="run a noise-loop campaign")
    _add_scenario_args(p_bench)
    p_bench.add_argument("--aircraft", required=True,
                         help="count or inclusive range A..B")
    _add_disc_args(p_bench)
    p_bench.add_argument("--runs", type=int, default=100)
    p_bench.add_argument("--timeout", type=float, default=60.0)
    p_bench.add_argument("--methods", default="sbf,greedy")
    p_bench.add_argument("--csv", required=True)
    p_bench.add_argument("--solver", default=None,
                         help="external solver binary for the 'external' method")
    p_bench.add_argument("--plots", default=None,
                         help="directory for rendered figures")
    p_bench.set_defaults(fn=_cmd_bench)

    p_iter = sub.add_parser("iterate", help="anytime parameter deepening")
    p_iter.add_argument("--in", dest="infile", required=True)
    p_iter.add_argument("--budget", type=float, required=True)
    p_iter.add_argument("--schedule", default=None,
                        help='semicolon-separated "p,m,g" triples')
    p_iter.set_defaults(fn=_cmd_iterate)

    p_rep = sub.add_parser("report", help="render figures from a campaign CSV")
    p_rep.add_argument("--csv", required=True)
    p_rep.add_argument("--out-dir", required=True)
    p_rep.set_defaults(fn=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InstanceFormatError, ParameterError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnsolvableInstanceError as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except DeconflictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
