"""Stage timings of sampling, feasibility and cost evaluation.

Sampling covers polynomial generation through the Cartesian back
transform. Each count is timed serially and with the thread-parallel
mode on the same fixed scenario (straight two-lane road, one moving
vehicle ahead).
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .config import PlannerConfig, load_config
from .cost import CostContext
from .fixtures import LANE_WIDTH, moving_obstacle, _box, _problem, _straight
from .planner import run_costs, run_feasibility
from .prediction import predict_all
from .refpath import build_reference_path, cartesian_to_frenet, plan_route
from .sampler import DEFAULT_LEVELS, default_config_for, generate_bundle
from .scenario import scenario_from_dict

__all__ = ["LADDER", "STAGES", "BenchRow", "BenchCase", "bench_case", "run_benchmark", "write_csv", "level_for_count"]

LADDER = (50, 180, 800, 3500, 13000, 90000)
STAGES = ("sampling", "feasibility", "cost", "total")
CSV_COLUMNS = ("count", "stage", "mode", "median_ms", "p95_ms", "speedup")


@dataclass
class BenchRow:
    count: int
    stage: str
    mode: str
    median_ms: float
    p95_ms: float
    speedup: float

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def level_for_count(count: int, levels: Optional[Dict[int, tuple]] = None) -> int:
    levels = levels or DEFAULT_LEVELS
    for level, dims in sorted(levels.items()):
        if int(np.prod(dims)) == count:
            return level
    ladder = sorted(int(np.prod(d)) for d in levels.values())
    raise ValueError(f"count {count} is not on the density ladder {ladder}")


@dataclass(eq=False)
class BenchCase:
    """Everything a pipeline run needs, built once per benchmark."""

    config: PlannerConfig
    path: object
    initial: object
    fstate: object
    ctx: CostContext

    def sampling_config(self, count: int):
        cfg = self.config
        level = level_for_count(count, cfg.levels)
        return default_config_for(
            self.fstate, cfg.vehicle, cfg.horizon, 0.1, level, cfg.levels, cfg.t_min, cfg.d_range
        )


def bench_case(config: Optional[PlannerConfig] = None) -> BenchCase:
    config = config or load_config()
    half = LANE_WIDTH / 2.0
    data = {
        "dt": 0.1,
        "lanelets": _straight(2, 300.0),
        "obstacles": [moving_obstacle(1, 40.0, 0.0, 8.0, 0.0, 100)],
        "planning_problem": _problem(10.0, 0.0, 12.0, _box(200.0, 230.0, -half, half), (50, 250)),
    }
    scenario = scenario_from_dict(data)
    path = build_reference_path(scenario, plan_route(scenario), config.smoothing, config.spacing)
    initial = scenario.problem.initial_state
    steps = int(round(config.horizon / scenario.dt))
    ctx = CostContext(
        v_ref=config.v_ref,
        predictions=predict_all(scenario.obstacles, 0, steps, scenario.dt, config.prediction),
        T=config.horizon,
        dt=scenario.dt,
        ego_length=config.vehicle.length,
        ego_width=config.vehicle.width,
        path=path,
    )
    return BenchCase(config, path, initial, cartesian_to_frenet(path, initial), ctx)


def run_pipeline(case: BenchCase, count: int, workers: int = 1):
    """One timed pass; returns ``(stage times in ms, bundle)``."""
    samp = case.sampling_config(count)
    t0 = time.perf_counter()
    bundle = generate_bundle(case.fstate, samp, case.path, initial=case.initial, workers=workers)
    t1 = time.perf_counter()
    rows = run_feasibility(bundle, case.config.vehicle, workers)
    t2 = time.perf_counter()
    run_costs(bundle, rows, case.config.weights, case.ctx, workers)
    t3 = time.perf_counter()
    times = {
        "sampling": 1000.0 * (t1 - t0),
        "feasibility": 1000.0 * (t2 - t1),
        "cost": 1000.0 * (t3 - t2),
        "total": 1000.0 * (t3 - t0),
    }
    return times, bundle


def _parallel_workers(config: PlannerConfig) -> int:
    if config.threads > 0:
        return config.threads
    return max(2, os.cpu_count() or 2)


def run_benchmark(
    counts: Sequence[int] = LADDER,
    repetitions: int = 30,
    parallel: bool = True,
    warmup: int = 5,
    config: Optional[PlannerConfig] = None,
    case: Optional[BenchCase] = None,
) -> List[BenchRow]:
    """Median and 95th percentile stage times per count and mode.

    ``parallel=False`` times only the serial mode. The speedup column is
    serial median over parallel median (1.0 for serial rows).
    """
    if not counts:
        raise ValueError("counts must not be empty")
    if repetitions < 1 or warmup < 0:
        raise ValueError("repetitions must be positive and warmup non-negative")
    case = case or bench_case(config)
    modes = [("serial", 1)]
    if parallel:
        modes.append(("parallel", _parallel_workers(case.config)))
    rows: List[BenchRow] = []
    for count in counts:
        level_for_count(count, case.config.levels)
        medians: Dict[str, Dict[str, float]] = {}
        samples: Dict[str, Dict[str, list]] = {}
        for mode, workers in modes:
            for _ in range(warmup):
                run_pipeline(case, count, workers)
            acc = {s: [] for s in STAGES}
            for _ in range(repetitions):
                times, _ = run_pipeline(case, count, workers)
                for s in STAGES:
                    acc[s].append(times[s])
            samples[mode] = acc
            medians[mode] = {s: float(np.median(acc[s])) for s in STAGES}
        for mode, _ in modes:
            for s in STAGES:
                speedup = medians["serial"][s] / medians[mode][s] if medians[mode][s] > 0 else float("nan")
                rows.append(
                    BenchRow(count, s, mode, medians[mode][s], float(np.percentile(samples[mode][s], 95)), speedup)
                )
    return rows


def write_csv(rows: Sequence[BenchRow], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for r in rows:
            writer.writerow(r.as_dict())
