"""Closed-loop single-agent simulation and the overtaking weight study.

The executed motion is the planned motion (perfect tracking). Each cycle
plans from the current state, executes the first ``replan_every`` steps
of the chosen trajectory and classifies the agent status.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from shapely.geometry import Point, Polygon

from .collision import footprint_obb, obb_intersects, obstacle_sweeps, road_boundary
from .config import PlannerConfig, load_config
from .cost import CostContext, CostWeights
from .feasibility import VehicleParams
from .planner import PlanningFailure, PlanResult, plan_cycle
from .prediction import predict_all
from .refpath import ReferencePath, build_reference_path, cartesian_to_frenet, plan_route
from .sampler import default_config_for
from .scenario import CartesianState, Scenario, obstacle_state_at

__all__ = [
    "AgentStatus",
    "StepRecord",
    "RunLog",
    "SimulationSetup",
    "setup_simulation",
    "cycle_inputs",
    "plan_from",
    "road_d_range",
    "run_scenario",
    "goal_velocity_profile",
    "overtaking_study",
    "STUDY_GRID",
    "GOAL_FAMILY",
]


class AgentStatus(str, enum.Enum):
    IDLE = "Idle"
    RUNNING = "Running"
    GOAL_REACHED = "GoalReached"
    GOAL_REACHED_OUTSIDE_TARGET_TIME = "GoalReachedOutsideTargetTime"
    GOAL_REACHED_FASTER_THAN_TARGET_TIME = "GoalReachedFasterThanTargetTime"
    MISSED_TARGET = "MissedTarget"
    TIME_LIMIT_REACHED = "TimeLimitReached"
    ERROR = "Error"
    COLLISION = "Collision"

    @property
    def terminal(self) -> bool:
        return self not in (AgentStatus.IDLE, AgentStatus.RUNNING)


GOAL_FAMILY = frozenset(
    {
        AgentStatus.GOAL_REACHED,
        AgentStatus.GOAL_REACHED_OUTSIDE_TARGET_TIME,
        AgentStatus.GOAL_REACHED_FASTER_THAN_TARGET_TIME,
    }
)


@dataclass
class StepRecord:
    step: int
    x: float
    y: float
    psi: float
    v: float
    a: float
    kappa: float
    s: float = float("nan")
    d: float = float("nan")
    category: Optional[str] = None
    sample_index: Optional[List[int]] = None
    total_cost: Optional[float] = None
    timings: Dict[str, float] = field(default_factory=dict)


@dataclass
class RunLog:
    name: str
    status: AgentStatus
    steps: List[StepRecord]
    collision_step: Optional[int] = None
    message: str = ""
    obstacles: Dict[int, List[List[float]]] = field(default_factory=dict)

    @property
    def final_step(self) -> int:
        return self.steps[-1].step

    @property
    def goal_reached(self) -> bool:
        return self.status in GOAL_FAMILY

    def states(self) -> List[CartesianState]:
        return [CartesianState(r.x, r.y, r.psi, r.v, r.a, r.kappa, r.step) for r in self.steps]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status.value,
            "collision_step": self.collision_step,
            "message": self.message,
            "steps": [asdict(r) for r in self.steps],
        }

    def deterministic_dict(self) -> dict:
        """Log content without wall-clock timings."""
        d = self.to_dict()
        for r in d["steps"]:
            r.pop("timings")
        return d

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def goal_velocity_profile(v_ref: float, s0: float, v0: float, s_goal: Optional[float], v_goal: float, decel: float, t: np.ndarray):
    """Target speed over the horizon, capped so the goal speed is reachable at ``s_goal``.

    The cap is the braking envelope ``sqrt(v_goal^2 + 2 decel (s_goal - s))``
    evaluated along the constant-speed prediction ``s = s0 + v0 t``.
    """
    if s_goal is None:
        return float(v_ref)
    s = s0 + max(v0, 0.0) * t
    cap = np.sqrt(v_goal * v_goal + 2.0 * decel * np.maximum(s_goal - s, 0.0))
    return np.minimum(v_ref, cap)


@dataclass(eq=False)
class SimulationSetup:
    scenario: Scenario
    config: PlannerConfig
    weights: CostWeights
    vehicle: VehicleParams
    path: ReferencePath
    boundary: object
    goal: Polygon
    goal_s: tuple

    @property
    def steps(self) -> int:
        return int(round(self.config.horizon / self.scenario.dt))


def setup_simulation(scenario: Scenario, config: PlannerConfig, weights: Optional[CostWeights] = None, vehicle=None):
    route = plan_route(scenario, config.lane_change_penalty)
    path = build_reference_path(scenario, route, config.smoothing, config.spacing)
    goal = Polygon(scenario.problem.goal_region)
    goal_s = []
    for x, y in list(goal.exterior.coords)[:-1] + [tuple(goal.centroid.coords[0])]:
        try:
            goal_s.append(path.project(x, y)[1])
        except ValueError:
            continue
    if not goal_s:
        goal_s = [path.length]
    return SimulationSetup(
        scenario=scenario,
        config=config,
        weights=weights if weights is not None else config.weights,
        vehicle=vehicle if vehicle is not None else config.vehicle,
        path=path,
        boundary=road_boundary(scenario),
        goal=goal,
        goal_s=(min(goal_s), goal_s[-1], max(goal_s)),
    )


def _collides(state: CartesianState, scenario: Scenario, vehicle: VehicleParams, step: int) -> bool:
    ego = footprint_obb(state, vehicle.length, vehicle.width)
    for ob in scenario.obstacles:
        other = footprint_obb(obstacle_state_at(ob, step, scenario.dt), ob.length, ob.width)
        if obb_intersects(ego, other):
            return True
    return False


def _goal_status(setup: SimulationSetup, state: CartesianState, step: int) -> Optional[AgentStatus]:
    pp = setup.scenario.problem
    if not setup.goal.covers(Point(state.x, state.y)):
        return None
    if pp.goal_velocity_interval is not None:
        lo, hi = pp.goal_velocity_interval
        if not (lo <= state.v <= hi):
            return None
    t_lo, t_hi = pp.goal_time_interval
    if step < t_lo:
        return AgentStatus.GOAL_REACHED_FASTER_THAN_TARGET_TIME
    if step > t_hi:
        return AgentStatus.GOAL_REACHED_OUTSIDE_TARGET_TIME
    return AgentStatus.GOAL_REACHED


def road_d_range(setup: SimulationSetup, s: float, d_range, probe: float = 0.05):
    """Lateral sampling range trimmed to the drivable width at ``s``.

    Probes the normal at ``s`` and keeps offsets where the footprint
    center stays at least half a vehicle width inside the road. Falls back
    to ``d_range`` when no probe lies on the road.
    """
    half = 0.5 * setup.vehicle.width
    x, y, theta, _, _ = setup.path.evaluate(s)
    d = np.arange(d_range[0] - half, d_range[1] + half + 0.5 * probe, probe)
    pts = np.column_stack([x - d * np.sin(theta), y + d * np.cos(theta)])
    inside = d[setup.boundary.contains_points(pts)]
    if len(inside) == 0:
        return d_range
    lo, hi = float(inside.min()) + half, float(inside.max()) - half
    if lo > hi:
        return d_range
    return (max(d_range[0], lo), min(d_range[1], hi))


def cycle_inputs(setup: SimulationSetup, state: CartesianState, step: int):
    """Sampling grid, cost context and obstacle sweeps for one cycle at ``step``."""
    sc, cfg, vehicle = setup.scenario, setup.config, setup.vehicle
    K = setup.steps
    fstate = cartesian_to_frenet(setup.path, state)
    d_range = road_d_range(setup, fstate.s, cfg.d_range) if cfg.clip_d_to_road else cfg.d_range
    samp = default_config_for(fstate, vehicle, cfg.horizon, sc.dt, cfg.density, cfg.levels, cfg.t_min, d_range)
    t = np.arange(K + 1) * sc.dt
    pp = sc.problem
    if pp.goal_velocity_interval is not None:
        lo, hi = pp.goal_velocity_interval
        v_goal = 0.5 * (lo + hi)
        v_ref = goal_velocity_profile(cfg.v_ref, fstate.s, fstate.s_dot, setup.goal_s[1], v_goal, cfg.goal_decel, t)
    else:
        v_ref = cfg.v_ref
    ctx = CostContext(
        v_ref=v_ref,
        predictions=predict_all(sc.obstacles, step, K, sc.dt, cfg.prediction),
        T=cfg.horizon,
        dt=sc.dt,
        ego_length=vehicle.length,
        ego_width=vehicle.width,
        path=setup.path,
    )
    return samp, ctx, obstacle_sweeps(sc.obstacles, step, K, sc.dt)


def plan_from(setup: SimulationSetup, state: CartesianState, step: int, workers: Optional[int] = None) -> PlanResult:
    """One planning cycle of the simulation at ``step``."""
    samp, ctx, sweeps = cycle_inputs(setup, state, step)
    return plan_cycle(
        state, setup.scenario, setup.path, samp, setup.weights, setup.vehicle, ctx,
        step=step, boundary=setup.boundary, sweeps=sweeps, harm=setup.config.harm,
        workers=setup.config.workers if workers is None else workers,
    )


def run_scenario(
    scenario: Scenario,
    weights: Optional[CostWeights] = None,
    config: Optional[PlannerConfig] = None,
    vehicle: Optional[VehicleParams] = None,
    replan_every: Optional[int] = None,
    name: str = "",
    on_cycle: Optional[Callable[[int, PlanResult], None]] = None,
) -> RunLog:
    """Simulate until a terminal status; never raises on planning errors."""
    config = config or load_config()
    replan_every = int(replan_every or config.replan_every)
    if replan_every < 1:
        raise ValueError("replan_every must be at least 1")
    state = scenario.problem.initial_state
    step = state.step
    records: List[StepRecord] = []
    status = AgentStatus.RUNNING
    collision_step = None
    message = ""

    def record(st: CartesianState, k: int, path=None) -> StepRecord:
        s = d = float("nan")
        if path is not None:
            try:
                f = cartesian_to_frenet(path, st)
                s, d = f.s, f.d
            except ValueError:
                pass
        r = StepRecord(k, st.x, st.y, st.psi, st.v, st.a, st.kappa, s, d)
        records.append(r)
        return r

    try:
        setup = setup_simulation(scenario, config, weights, vehicle)
    except Exception as exc:  # route or path construction failed
        record(state, step)
        return RunLog(name, AgentStatus.ERROR, records, message=f"{type(exc).__name__}: {exc}")

    t_hi = scenario.problem.goal_time_interval[1]
    limit = t_hi + config.grace_steps
    current = record(state, step, setup.path)
    if _collides(state, scenario, setup.vehicle, step):
        return RunLog(name, AgentStatus.COLLISION, records, collision_step=step)

    while not status.terminal:
        try:
            result = plan_from(setup, state, step)
        except (PlanningFailure, ValueError, ArithmeticError) as exc:
            status = AgentStatus.ERROR
            message = f"{type(exc).__name__}: {exc}"
            break
        current.category = result.category
        current.sample_index = list(result.chosen.index)
        tc = result.chosen.total_cost
        current.total_cost = None if tc is None or not math.isfinite(tc) else tc
        current.timings = dict(result.timings, total=result.wall_time_ms)
        if on_cycle is not None:
            on_cycle(step, result)

        n_exec = min(replan_every, result.chosen.x.shape[-1] - 1)
        for j in range(1, n_exec + 1):
            step += 1
            s = result.chosen.state_at(j)
            state = CartesianState(s.x, s.y, s.psi, s.v, s.a, s.kappa, step)
            current = record(state, step, setup.path)
            if _collides(state, scenario, setup.vehicle, step):
                status, collision_step = AgentStatus.COLLISION, step
                break
            goal = _goal_status(setup, state, step)
            if goal is not None:
                status = goal
                break
            if current.s > setup.goal_s[2]:
                status = AgentStatus.MISSED_TARGET
                break
            if step > limit:
                status = AgentStatus.TIME_LIMIT_REACHED
                break

    log = RunLog(name, status, records, collision_step=collision_step, message=message)
    last = records[-1].step
    for ob in scenario.obstacles:
        log.obstacles[ob.id] = [
            [st.x, st.y, st.psi] for st in (obstacle_state_at(ob, k, scenario.dt) for k in range(records[0].step, last + 1))
        ]
    return log


# -- overtaking study -----------------------------------------------------------------------

STUDY_GRID = {
    "velocity_offset": (0.05, 0.1, 1.0),
    "dist_to_obstacle": (0.0, 100.0),
    "collision_probability": (2.0, 100.0, 1000.0),
}


def _lead_metrics(log: RunLog, scenario: Scenario, setup_path: ReferencePath, vehicle: VehicleParams, lead_id: int):
    """Overtake flag and minimal lateral clearance to the lead vehicle.

    Clearance is the lateral gap between the footprints (path frame) over
    the steps where they overlap longitudinally; ``inf`` if they never do.
    """
    lead = next(ob for ob in scenario.obstacles if ob.id == lead_id)
    clearance = math.inf
    overtook = False
    for r in log.steps:
        if not math.isfinite(r.s):
            continue
        ls = obstacle_state_at(lead, r.step, scenario.dt)
        try:
            lf = cartesian_to_frenet(setup_path, ls)
        except ValueError:
            continue
        ds = r.s - lf.s
        if ds > 0.5 * (vehicle.length + lead.length):
            overtook = True
        if abs(ds) < 0.5 * (vehicle.length + lead.length):
            gap = abs(r.d - lf.d) - 0.5 * (vehicle.width + lead.width)
            clearance = min(clearance, gap)
    return overtook, clearance


def overtaking_study(
    scenario: Scenario,
    weight_grid: Optional[Dict[str, Sequence[float]]] = None,
    config: Optional[PlannerConfig] = None,
    lead_id: int = 1,
    workers: int = 1,
) -> List[dict]:
    """Run the weight grid on the overtaking fixture, one row per combination.

    Grid keys are cost names; unlisted weights keep their configured value.
    Rows hold the weights, ``overtook``, ``min_clearance``,
    ``completion_time`` (seconds, ``None`` if the goal was not reached),
    ``status`` and ``collision``.
    """
    grid = dict(STUDY_GRID if weight_grid is None else weight_grid)
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("weight grid must not be empty")
    config = config or load_config()
    keys = list(grid)
    combos = [dict(zip(keys, vals)) for vals in np.array(np.meshgrid(*[grid[k] for k in keys], indexing="ij")).reshape(len(keys), -1).T]

    def run(combo):
        cfg = config.with_weights(**{k: float(v) for k, v in combo.items()})
        t0 = time.perf_counter()
        log = run_scenario(scenario, config=cfg)
        elapsed = time.perf_counter() - t0
        setup = setup_simulation(scenario, cfg)
        overtook, clearance = _lead_metrics(log, scenario, setup.path, cfg.vehicle, lead_id)
        return {
            **{k: float(v) for k, v in combo.items()},
            "overtook": overtook,
            "min_clearance": clearance,
            "completion_time": (log.final_step - log.steps[0].step) * scenario.dt if log.goal_reached else None,
            "status": log.status.value,
            "collision": log.status == AgentStatus.COLLISION,
            "wall_time_s": elapsed,
            "log": log,
        }

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, combos))
    return [run(c) for c in combos]
