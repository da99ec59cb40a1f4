"""Per-cycle evaluation funnel.

feasibility -> cost -> sort -> first collision-free -> road boundary,
falling back to the minimum-risk trajectory and then to a stopping
trajectory.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .collision import ObstacleSweeps, RoadBoundary, collision_free_rows, obstacle_sweeps, on_road_rows
from .cost import CostContext, CostWeights, collision_probability_steps, evaluate_costs
from .feasibility import CONSTRAINTS, VehicleParams, feasibility_flags
from .refpath import FrenetState, ReferencePath, cartesian_to_frenet
from .sampler import SamplingConfig, TrajectoryBundle, TrajectorySample, generate_bundle
from .scenario import CartesianState, Scenario

__all__ = [
    "OPTIMAL",
    "EMERGENCY_RISK",
    "EMERGENCY_STOP",
    "PlanResult",
    "PlanningFailure",
    "plan_cycle",
    "evaluate_bundle",
    "run_feasibility",
    "run_costs",
    "min_risk_trajectory",
    "stopping_trajectory",
    "risk_per_row",
]

OPTIMAL = "optimal"
EMERGENCY_RISK = "emergency_risk"
EMERGENCY_STOP = "emergency_stop"

# rows collision-checked per vectorized batch while walking the sorted list
WALK_BATCH = 16


class PlanningFailure(RuntimeError):
    """Not even a stopping trajectory is kinematically feasible."""


@dataclass(eq=False)
class PlanResult:
    chosen: TrajectorySample
    category: str
    diagnostics: Dict[str, int]
    wall_time_ms: float = 0.0
    timings: Dict[str, float] = field(default_factory=dict)
    samples: Optional[TrajectoryBundle] = None
    order: Optional[np.ndarray] = None

    def signature(self):
        """Everything except wall time, for bit-exact comparisons."""
        c = self.chosen
        b = c.bundle
        arrays = tuple(getattr(b, f)[c.row].tobytes() for f in ("x", "y", "psi", "v", "a", "kappa", "s", "d"))
        cost = b.costs[c.row].tobytes() if b.costs is not None else b""
        return (self.category, c.index, arrays, cost, tuple(sorted(self.diagnostics.items())))


def _chunks(n: int, workers: int):
    bounds = np.linspace(0, n, min(workers, max(n, 1)) + 1).astype(int)
    return [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def run_feasibility(bundle: TrajectoryBundle, vehicle: VehicleParams, workers: int = 1) -> np.ndarray:
    """Fill ``bundle.feasibility`` and return the feasible row indices."""
    n = len(bundle)
    if workers > 1 and n > 1:
        chunks = _chunks(n, workers)
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(
                pool.map(
                    lambda c: feasibility_flags(
                        bundle.v[c[0]:c[1]], bundle.a[c[0]:c[1]], bundle.kappa[c[0]:c[1]], bundle.psi[c[0]:c[1]],
                        bundle.dt, vehicle,
                    ),
                    chunks,
                )
            )
        bundle.feasibility = np.concatenate(parts)
    else:
        bundle.feasibility = feasibility_flags(bundle.v, bundle.a, bundle.kappa, bundle.psi, bundle.dt, vehicle)
    return np.flatnonzero(np.all(bundle.feasibility, axis=1))


def run_costs(bundle: TrajectoryBundle, rows, weights: CostWeights, ctx: CostContext, workers: int = 1) -> np.ndarray:
    """Cost ``rows`` of the bundle; returns the subset with finite costs."""
    rows = np.asarray(rows, dtype=int)
    if workers > 1 and len(rows) > 1:
        chunks = _chunks(len(rows), workers)
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            masks = list(pool.map(lambda c: evaluate_costs(bundle, weights, ctx, rows=rows[c[0]:c[1]]), chunks))
        finite = np.concatenate(masks)
    else:
        finite = evaluate_costs(bundle, weights, ctx, rows=rows)
    return rows[finite]


def evaluate_bundle(bundle: TrajectoryBundle, vehicle: VehicleParams, weights: CostWeights, ctx: CostContext, workers: int = 1):
    """Feasibility for all rows, then costs for the feasible ones.

    With ``workers > 1`` both stages run on contiguous row chunks in a
    thread pool and are merged in order; results match the serial run
    bit for bit. Returns the feasible-row indices whose costs are finite.
    """
    return run_costs(bundle, run_feasibility(bundle, vehicle, workers), weights, ctx, workers)


def risk_per_row(bundle: TrajectoryBundle, rows, ctx: CostContext, harm: float) -> np.ndarray:
    """``max`` over obstacles and steps of collision probability times harm."""
    rows = np.asarray(rows, dtype=int)
    if len(ctx.predictions) == 0 or len(rows) == 0:
        return np.zeros(len(rows))
    p = collision_probability_steps(bundle.x[rows], bundle.y[rows], bundle.psi[rows], ctx)
    return np.max(p * harm, axis=(1, 2))


def _cost_order(bundle: TrajectoryBundle, rows) -> np.ndarray:
    """Rows sorted by total cost, ties by sampling index triple."""
    rows = np.asarray(rows, dtype=int)
    idx = bundle.index[rows]
    order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0], bundle.total_cost[rows]))
    return rows[order]


def min_risk_trajectory(feasible: Sequence[TrajectorySample], ctx: CostContext, harm: float = 1.0) -> TrajectorySample:
    """Feasible sample with the smallest peak ``p * H``; ties by lower total cost."""
    if not feasible:
        raise ValueError("min_risk_trajectory needs at least one feasible sample")
    bundle = feasible[0].bundle
    rows = np.array([s.row for s in feasible])
    risk = risk_per_row(bundle, rows, ctx, harm)
    cost = np.array([s.total_cost if s.total_cost is not None else np.inf for s in feasible])
    idx = bundle.index[rows]
    best = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0], cost, risk))[0]
    return feasible[best]


def stopping_trajectory(feasible: Sequence[TrajectorySample], current_d: float, config: SamplingConfig) -> TrajectorySample:
    """Keep the lateral offset nearest ``current_d`` and brake hardest.

    Restricts to samples ending at ``d_values[argmin |current_d - d_values|]``
    and returns the lowest end velocity there; ties by shorter duration.
    """
    if not feasible:
        raise ValueError("stopping_trajectory needs at least one feasible sample")
    d_values = np.asarray(config.d_values)
    target = d_values[int(np.argmin(np.abs(current_d - d_values)))]
    bucket = [s for s in feasible if s.d_end == target]
    if not bucket:
        raise ValueError(f"no feasible sample ends at lateral offset {target}")
    return min(bucket, key=lambda s: (s.v_end, s.tau, s.index))


def _stopping_config(config: SamplingConfig, fstate: FrenetState, dt: float) -> SamplingConfig:
    """Dense braking grid: current lateral bucket, end speeds down to zero."""
    d_values = np.asarray(config.d_values)
    target = float(d_values[int(np.argmin(np.abs(fstate.d - d_values)))])
    v = max(fstate.s_dot, 0.0)
    taus = np.arange(1, config.steps + 1) * dt
    return SamplingConfig(
        t_values=tuple(float(t) for t in taus),
        d_values=(target,),
        v_values=tuple(float(x) for x in np.linspace(0.0, v, 5)),
        T=config.T,
        dt=config.dt,
    )


def plan_cycle(
    current: CartesianState,
    scenario: Scenario,
    path: ReferencePath,
    config: SamplingConfig,
    weights: CostWeights,
    vehicle: VehicleParams,
    ctx: CostContext,
    *,
    step: int = 0,
    boundary: Optional[RoadBoundary] = None,
    sweeps: Optional[ObstacleSweeps] = None,
    harm: float = 1.0,
    workers: int = 1,
    keep_samples: bool = True,
) -> PlanResult:
    """Run one planning cycle from ``current`` at time step ``step``."""
    t0 = time.perf_counter()
    fstate = cartesian_to_frenet(path, current)
    bundle = generate_bundle(fstate, config, path, initial=current, workers=workers)
    t1 = time.perf_counter()
    diag = {
        "generated": len(bundle) + bundle.dropped,
        "dropped_singular": bundle.dropped,
        "collision_checked": 0,
        "collision_failures": 0,
        "boundary_failures": 0,
        "non_finite_cost": 0,
    }
    feasible_rows = run_feasibility(bundle, vehicle, workers)
    t2 = time.perf_counter()
    candidates = run_costs(bundle, feasible_rows, weights, ctx, workers)
    t3 = time.perf_counter()
    for j, name in enumerate(CONSTRAINTS):
        diag[f"infeasible_{name}"] = int(np.sum(~bundle.feasibility[:, j]))
    n_feasible = len(feasible_rows)
    diag["feasible"] = n_feasible
    diag["non_finite_cost"] = n_feasible - len(candidates)

    if sweeps is None:
        sweeps = obstacle_sweeps(scenario.obstacles, step, config.steps, scenario.dt)
    order = _cost_order(bundle, candidates)

    chosen_row = None
    for lo in range(0, len(order), WALK_BATCH):
        rows = order[lo : lo + WALK_BATCH]
        free = collision_free_rows(bundle.x[rows], bundle.y[rows], bundle.psi[rows], vehicle, sweeps)
        for r, ok in zip(rows, free):
            bundle.collision_checked[r] = True
            bundle.collision_free[r] = ok
            diag["collision_checked"] += 1
            if not ok:
                diag["collision_failures"] += 1
                continue
            on_road = True
            if boundary is not None:
                on_road = bool(on_road_rows(bundle.x[r], bundle.y[r], bundle.psi[r], vehicle, boundary)[0])
            bundle.on_road[r] = on_road
            if on_road:
                chosen_row = int(r)
                break
            diag["boundary_failures"] += 1
        if chosen_row is not None:
            break

    t4 = time.perf_counter()

    if chosen_row is not None:
        category = OPTIMAL
        chosen = bundle[chosen_row]
    elif len(ctx.predictions) > 0 and len(candidates) > 0:
        category = EMERGENCY_RISK
        chosen = min_risk_trajectory([bundle[int(r)] for r in candidates], ctx, harm)
    else:
        category = EMERGENCY_STOP
        chosen = None
        if len(feasible_rows):
            try:
                chosen = stopping_trajectory([bundle[int(r)] for r in feasible_rows], fstate.d, config)
            except ValueError:
                chosen = None
        if chosen is None:
            stop_cfg = _stopping_config(config, fstate, config.dt)
            stop = generate_bundle(fstate, stop_cfg, path, initial=current)
            if len(stop):
                stop.feasibility = feasibility_flags(stop.v, stop.a, stop.kappa, stop.psi, stop.dt, vehicle)
                rows = np.flatnonzero(stop.feasible)
                if len(rows):
                    evaluate_costs(stop, weights, ctx, rows=rows)
                    chosen = stopping_trajectory([stop[int(r)] for r in rows], fstate.d, stop_cfg)
        if chosen is None:
            raise PlanningFailure("no kinematically feasible stopping trajectory")

    return PlanResult(
        chosen=chosen,
        category=category,
        diagnostics=diag,
        wall_time_ms=1000.0 * (time.perf_counter() - t0),
        timings={
            "sampling": 1000.0 * (t1 - t0),
            "feasibility": 1000.0 * (t2 - t1),
            "cost": 1000.0 * (t3 - t2),
            "collision": 1000.0 * (t4 - t3),
        },
        samples=bundle if keep_samples else None,
        order=order if keep_samples else None,
    )
