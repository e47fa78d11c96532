"""Command-line entry point: ``uavmission {plan,bench,time-costs,gen}``."""
from __future__ import annotations

import argparse
import os
import sys

from .bench import (
    ALL_METHODS,
    EMERGENCY_PRESETS,
    BenchPlan,
    load_scenario,
    run_bench,
    run_single,
    time_cost_functions,
    write_timing_csv,
)
from .mission import TYPE_NAMES, ScenarioError, random_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSION_FAILED = 3


def _mix(text: str):
    if not text:
        return None
    out = {}
    for part in text.split(","):
        name, _, frac = part.partition("=")
        if name not in TYPE_NAMES:
            raise argparse.ArgumentTypeError(f"unknown task type {name!r}")
        try:
            out[name] = float(frac)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad fraction in {part!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavmission", description="Real-time multi-UAV mission planning bench.")
    sub = p.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="simulate one method on one scenario file")
    plan.add_argument("--scenario", required=True)
    plan.add_argument("--method", required=True, choices=ALL_METHODS)
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--dt", type=float, default=0.1)
    plan.add_argument("--emergencies", choices=EMERGENCY_PRESETS, default="none")
    plan.add_argument("--out", default="out/plan")

    bench = sub.add_parser("bench", help="compare methods over seeded random scenarios")
    bench.add_argument("--methods", default=",".join(ALL_METHODS), help="comma-separated subset")
    bench.add_argument("--trials", type=int, default=20)
    bench.add_argument("--seed", type=int, default=0, help="first seed; trials use consecutive seeds")
    bench.add_argument("--K", type=int, default=4)
    bench.add_argument("--N", type=int, default=25)
    bench.add_argument("--area", type=float, default=2500.0)
    bench.add_argument("--mix", type=_mix, default=None, help="e.g. point=0.6,line=0.4")
    bench.add_argument("--dt", type=float, default=0.1)
    bench.add_argument("--out", default="out/bench")

    tc = sub.add_parser("time-costs", help="time the Euclidean, CS and CSC distance costs")
    tc.add_argument("--samples", type=int, default=1000)
    tc.add_argument("--repetitions", type=int, default=50)
    tc.add_argument("--seed", type=int, default=0)
    tc.add_argument("--out", default="out/timing")

    gen = sub.add_parser("gen", help="write a random scenario file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--K", type=int, default=4)
    gen.add_argument("--N", type=int, default=25)
    gen.add_argument("--area", type=float, default=2500.0)
    gen.add_argument("--mix", type=_mix, default=None)
    gen.add_argument("--out", required=True, help="scenario JSON path")
    return p


def _plan(args) -> int:
    scenario = load_scenario(args.scenario)
    report, result = run_single(scenario, args.method, args.seed, args.dt, args.emergencies, args.out)
    print(f"{args.method}: total distance {report.total_distance:.2f} m, "
          f"completion {report.completion_time:.1f} s, files in {args.out}")
    if report.failed:
        print(f"mission failed: {getattr(result, 'failure', '')}", file=sys.stderr)
        return EXIT_MISSION_FAILED
    return EXIT_OK


def _bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    plan = BenchPlan(methods, list(range(args.seed, args.seed + args.trials)), args.K, args.N,
                     args.area, args.mix, args.out, args.dt)
    report = run_bench(plan)
    for row in report.summary:
        gap = row["average_gap"]
        print(f"{row['method']:7s} total {row['average_total_distance_m']:10.1f} m  "
              f"gap {'-' if gap is None else f'{100 * gap:6.2f}%'}  "
              f"planning {row['average_total_planning_time_s']:.4f} s")
    print(f"summary written to {os.path.join(args.out, 'summary.csv')}")
    return EXIT_OK


def _time_costs(args) -> int:
    rows = time_cost_functions(args.samples, args.seed, args.repetitions)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "cost_timing.csv")
    write_timing_csv(rows, path)
    for r in rows:
        print(f"{r.cost:9s} {r.mean_seconds * 1e6:9.3f} us/call over {r.calls} calls")
    return EXIT_OK


def _gen(args) -> int:
    sc = random_scenario(args.seed, args.K, args.N, args.area, args.mix)
    d = os.path.dirname(args.out)
    if d:
        os.makedirs(d, exist_ok=True)
    sc.save(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"plan": _plan, "bench": _bench, "time-costs": _time_costs, "gen": _gen}[args.command]
    try:
        return handler(args)
    except (ScenarioError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
