"""Command-line interface: ``run``, ``study`` and ``bench``.

Exit codes: 0 when every run reached its goal (any timing class), 1
otherwise, 2 on usage errors. The thread count of parallel modes can be
overridden with the ``FRENETPLAN_THREADS`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import List, Optional

from .bench import LADDER, level_for_count, run_benchmark, write_csv
from .config import load_config
from .fixtures import fixture_names, load_fixture
from .scenario import ScenarioError, load_scenario
from .sim import GOAL_FAMILY, STUDY_GRID, AgentStatus, overtaking_study, run_scenario

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frenetplan", description="Sampling-based trajectory planner in the path frame.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("scenario", help="scenario JSON file or name of a shipped fixture")
    run.add_argument("--config", help="JSON file overriding the default configuration")
    run.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    run.add_argument("--plot-every", type=int, default=10, help="write a fan plot every N cycles, 0 disables")
    run.add_argument("--replan-every", type=int, default=None, help="steps executed per planning cycle")

    study = sub.add_parser("study", help="overtaking cost-weight study")
    study.add_argument("fixture", help="shipped fixture name, e.g. overtake")
    study.add_argument("--out", default="study", help="output directory (default: %(default)s)")
    study.add_argument("--config", help="JSON file overriding the default configuration")
    study.add_argument("--velocity", type=float, nargs="*", default=list(STUDY_GRID["velocity_offset"]))
    study.add_argument("--distance", type=float, nargs="*", default=list(STUDY_GRID["dist_to_obstacle"]))
    study.add_argument("--collision", type=float, nargs="*", default=list(STUDY_GRID["collision_probability"]))

    bench = sub.add_parser("bench", help="stage timing benchmark")
    bench.add_argument("--counts", type=int, nargs="+", default=list(LADDER))
    bench.add_argument("--parallel", action=argparse.BooleanOptionalAction, default=True)
    bench.add_argument("--repetitions", type=int, default=30)
    bench.add_argument("--warmup", type=int, default=5)
    bench.add_argument("--out", default="bench.csv", help="CSV file (default: %(default)s)")
    return parser


def _config(parser, path: Optional[str]):
    if path is None:
        return load_config()
    if not Path(path).is_file():
        parser.error(f"config file not found: {path}")
    return load_config(path)


def cmd_run(parser, args) -> int:
    path = Path(args.scenario)
    if path.is_file():
        scenario = load_scenario(path)
        name = path.stem
    elif args.scenario in fixture_names():
        scenario = load_fixture(args.scenario)
        name = args.scenario
    else:
        parser.error(f"scenario not found: {args.scenario}")
    config = _config(parser, args.config)
    if args.plot_every < 0 or (args.replan_every is not None and args.replan_every < 1):
        parser.error("--plot-every must be >= 0 and --replan-every >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cycles = [0]

    def on_cycle(step, result):
        if args.plot_every and cycles[0] % args.plot_every == 0:
            from .plotting import plot_fan

            plot_fan(result, scenario, step, out / f"fan_{step:04d}.svg", vehicle=config.vehicle)
        cycles[0] += 1

    log = run_scenario(scenario, config=config, replan_every=args.replan_every, name=name, on_cycle=on_cycle)
    log.save(out / "log.json")
    collisions = 1 if log.status == AgentStatus.COLLISION else 0
    print(f"{name}: status={log.status.value} steps={log.final_step - log.steps[0].step} collisions={collisions}")
    if log.message:
        print(f"  {log.message}")
    return 0 if log.goal_reached else 1


def cmd_study(parser, args) -> int:
    names = fixture_names()
    if args.fixture not in names:
        parser.error(f"unknown fixture {args.fixture!r}; available: {', '.join(names)}")
    grid = {"velocity_offset": args.velocity, "dist_to_obstacle": args.distance, "collision_probability": args.collision}
    if any(len(v) == 0 for v in grid.values()):
        parser.error("weight grid must not be empty")
    config = _config(parser, args.config)
    scenario = load_fixture(args.fixture)
    rows = overtaking_study(scenario, grid, config=config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    columns = [*grid, "overtook", "min_clearance", "completion_time", "status", "collision"]
    with open(out / "study.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for r in rows:
            writer.writerow({c: r[c] for c in columns})
    for r in rows:
        r["log"].save(out / ("log_" + "_".join(f"{r[k]:g}" for k in grid) + ".json"))
    from .plotting import plot_study

    plot_study(rows, scenario, out / "trajectories.svg", label_keys=list(grid))
    for r in rows:
        clearance = "-" if math.isinf(r["min_clearance"]) else f"{r['min_clearance']:.2f}"
        weights = " ".join(f"{k}={r[k]:g}" for k in grid)
        print(f"{weights} overtook={r['overtook']} clearance={clearance} status={r['status']}")
    return 0 if all(AgentStatus(r["status"]) in GOAL_FAMILY for r in rows) else 1


def cmd_bench(parser, args) -> int:
    for c in args.counts:
        try:
            level_for_count(c)
        except ValueError as exc:
            parser.error(str(exc))
    if args.repetitions < 1 or args.warmup < 0:
        parser.error("--repetitions must be >= 1 and --warmup >= 0")
    rows = run_benchmark(args.counts, repetitions=args.repetitions, parallel=args.parallel, warmup=args.warmup)
    write_csv(rows, args.out)
    for r in rows:
        if r.stage == "total":
            print(f"{r.count:>6} {r.mode:<8} median={r.median_ms:9.2f} ms p95={r.p95_ms:9.2f} ms speedup={r.speedup:.2f}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(parser, args)
        if args.command == "study":
            return cmd_study(parser, args)
        return cmd_bench(parser, args)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
