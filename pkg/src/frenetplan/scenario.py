"""Scenario data model and JSON ingestion.

The file format is a small JSON subset of a lanelet-based scenario
description::

    {
      "dt": 0.1,
      "lanelets": [{"id": 1, "left": [[x, y], ...], "right": [[x, y], ...],
                    "successors": [2], "adj_left": null, "adj_right": null}],
      "obstacles": [{"id": 10, "kind": "dynamic", "length": 4.5, "width": 2.0,
                     "states": [{"t": 0, "x": 0.0, "y": 0.0, "psi": 0.0, "v": 13.0}]}],
      "planning_problem": {
        "initial": {"x": 0.0, "y": 0.0, "psi": 0.0, "v": 10.0},
        "goal": [[x, y], ...],
        "goal_steps": [10, 60],
        "goal_velocity": [0.0, 20.0]
      }
    }

Lengths are meters, angles radians, velocities m/s. ``t`` is an integer
time step; ``goal_steps`` are time steps as well.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "CartesianState",
    "Lanelet",
    "Obstacle",
    "PlanningProblem",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "save_scenario",
    "obstacle_state_at",
    "resample_polyline",
]


class ScenarioError(ValueError):
    """Raised when a scenario file is malformed or violates an invariant."""


@dataclass(frozen=True)
class CartesianState:
    """Pose and motion of a vehicle at one time step.

    ``psi`` is the heading [rad], ``v`` the speed along the heading [m/s],
    ``a`` the tangential acceleration [m/s^2] and ``kappa`` the path
    curvature [1/m]. ``step`` is the integer time step the state belongs to.
    """

    x: float
    y: float
    psi: float = 0.0
    v: float = 0.0
    a: float = 0.0
    kappa: float = 0.0
    step: int = 0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _polyline_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool(np.array_equal(a, b))


def resample_polyline(points: np.ndarray, n: int) -> np.ndarray:
    """Resample a polyline to ``n`` points equally spaced in arc length."""
    points = np.asarray(points, dtype=float)
    if len(points) == n:
        return points.copy()
    seg = np.hypot(*np.diff(points, axis=0).T)
    s = np.concatenate(([0.0], np.cumsum(seg)))
    target = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(target, s, points[:, 0]), np.interp(target, s, points[:, 1])])


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


@dataclass(eq=False)
class Lanelet:
    id: int
    left_boundary: np.ndarray
    right_boundary: np.ndarray
    successor_ids: List[int] = field(default_factory=list)
    adjacent_left_id: Optional[int] = None
    adjacent_right_id: Optional[int] = None
    center_line: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.left_boundary = np.asarray(self.left_boundary, dtype=float).reshape(-1, 2)
        self.right_boundary = np.asarray(self.right_boundary, dtype=float).reshape(-1, 2)
        if len(self.left_boundary) < 2 or len(self.right_boundary) < 2:
            raise ScenarioError(f"lanelet {self.id}: boundaries need at least 2 points each")
        n = max(len(self.left_boundary), len(self.right_boundary))
        left = resample_polyline(self.left_boundary, n)
        right = resample_polyline(self.right_boundary, n)
        self.center_line = 0.5 * (left + right)
        # point-in-strip test: each center point strictly right of the left
        # boundary and strictly left of the right boundary (travel direction)
        for i, c in enumerate(self.center_line):
            j = min(i, n - 2)
            if not (_cross(left[j], left[j + 1], c) < 0.0 and _cross(right[j], right[j + 1], c) > 0.0):
                raise ScenarioError(
                    f"lanelet {self.id}: center point {i} does not lie strictly between the boundaries"
                )

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.center_line, axis=0).T)))

    def __eq__(self, other):
        if not isinstance(other, Lanelet):
            return NotImplemented
        return (
            self.id == other.id
            and _polyline_equal(self.left_boundary, other.left_boundary)
            and _polyline_equal(self.right_boundary, other.right_boundary)
            and list(self.successor_ids) == list(other.successor_ids)
            and self.adjacent_left_id == other.adjacent_left_id
            and self.adjacent_right_id == other.adjacent_right_id
        )


@dataclass(frozen=True)
class Obstacle:
    id: int
    kind: str
    length: float
    width: float
    states: Tuple[CartesianState, ...]

    def __post_init__(self):
        if self.kind not in ("static", "dynamic"):
            raise ScenarioError(f"obstacle {self.id}: kind must be 'static' or 'dynamic', got {self.kind!r}")
        if not (self.length > 0 and self.width > 0):
            raise ScenarioError(f"obstacle {self.id}: footprint dimensions must be positive")
        if len(self.states) == 0:
            raise ScenarioError(f"obstacle {self.id}: needs at least one state")
        if self.kind == "static" and len(self.states) != 1:
            raise ScenarioError(f"obstacle {self.id}: static obstacles carry exactly one state")
        steps = [st.step for st in self.states]
        for a, b in zip(steps, steps[1:]):
            if b != a + 1:
                raise ScenarioError(
                    f"obstacle {self.id}: states must be at consecutive, strictly increasing time steps"
                )

    @property
    def is_static(self) -> bool:
        return self.kind == "static"


@dataclass(frozen=True)
class PlanningProblem:
    initial_state: CartesianState
    goal_region: Tuple[Tuple[float, float], ...]
    goal_time_interval: Tuple[int, int]
    goal_velocity_interval: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        lo, hi = self.goal_time_interval
        if lo > hi:
            raise ScenarioError("planning problem: goal_steps must satisfy t_lo <= t_hi")
        if len(self.goal_region) < 3 or _polygon_area(self.goal_region) <= 0.0:
            raise ScenarioError("planning problem: goal polygon is degenerate (area must be positive)")
        if self.goal_velocity_interval is not None:
            vlo, vhi = self.goal_velocity_interval
            if vlo > vhi:
                raise ScenarioError("planning problem: goal_velocity must satisfy v_lo <= v_hi")


def _polygon_area(poly: Sequence[Sequence[float]]) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


@dataclass(eq=False)
class Scenario:
    lanelets: List[Lanelet]
    obstacles: List[Obstacle]
    problem: PlanningProblem
    dt: float = 0.1

    def __post_init__(self):
        if not (self.dt > 0):
            raise ScenarioError("dt must be positive")
        ids = [ob.id for ob in self.obstacles]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ScenarioError(f"obstacle ids must be unique (duplicate id {dup})")
        lids = [la.id for la in self.lanelets]
        if len(set(lids)) != len(lids):
            dup = next(i for i in lids if lids.count(i) > 1)
            raise ScenarioError(f"lanelet ids must be unique (duplicate id {dup})")
        known = set(lids)
        for la in self.lanelets:
            for ref in list(la.successor_ids) + [la.adjacent_left_id, la.adjacent_right_id]:
                if ref is not None and ref not in known:
                    raise ScenarioError(f"lanelet {la.id}: references unknown lanelet id {ref}")

    def lanelet(self, lanelet_id: int) -> Lanelet:
        for la in self.lanelets:
            if la.id == lanelet_id:
                return la
        raise KeyError(lanelet_id)

    def obstacle_state_at(self, obstacle: Obstacle, step: int) -> CartesianState:
        return obstacle_state_at(obstacle, step, self.dt)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.lanelets == other.lanelets
            and self.obstacles == other.obstacles
            and self.problem == other.problem
        )


def obstacle_state_at(obstacle: Obstacle, step: int, dt: float = 0.1) -> CartesianState:
    """State of ``obstacle`` at time step ``step``.

    Static obstacles return their single state for every step. Dynamic
    obstacles return the recorded state inside the record and are
    extrapolated at constant speed and heading past its end. Steps before
    the first record return the first state.
    """
    if obstacle.is_static:
        return obstacle.states[0]
    first = obstacle.states[0].step
    last = obstacle.states[-1]
    if step <= first:
        return obstacle.states[0]
    if step <= last.step:
        return obstacle.states[step - first]
    elapsed = (step - last.step) * dt
    return CartesianState(
        x=last.x + last.v * math.cos(last.psi) * elapsed,
        y=last.y + last.v * math.sin(last.psi) * elapsed,
        psi=last.psi,
        v=last.v,
        a=0.0,
        kappa=0.0,
        step=step,
    )


# -- JSON (de)serialization ------------------------------------------------------------


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"{where}: missing key {key!r}")
    return d[key]


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ScenarioError(f"{where}: value must be finite")
    return float(value)


def _points(value, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: expected a list of [x, y] points") from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ScenarioError(f"{where}: expected a list of [x, y] points")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{where}: coordinates must be finite")
    return arr


def _state(d: dict, where: str, default_step: int = 0) -> CartesianState:
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: state must be an object")
    return CartesianState(
        x=_num(_require(d, "x", where), where + ".x"),
        y=_num(_require(d, "y", where), where + ".y"),
        psi=_num(d.get("psi", 0.0), where + ".psi"),
        v=_num(d.get("v", 0.0), where + ".v"),
        a=_num(d.get("a", 0.0), where + ".a"),
        kappa=_num(d.get("kappa", 0.0), where + ".kappa"),
        step=int(d.get("t", default_step)),
    )


def _opt_id(value, where: str) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer id or null")
    return value


def scenario_from_dict(data: dict) -> Scenario:
    """Build and validate a :class:`Scenario` from parsed JSON."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario: top level must be an object")
    dt = _num(data.get("dt", 0.1), "dt")
    if dt <= 0:
        raise ScenarioError("dt must be positive")

    lanelets = []
    for k, ld in enumerate(_require(data, "lanelets", "scenario")):
        where = f"lanelets[{k}]"
        lid = _require(ld, "id", where)
        if isinstance(lid, bool) or not isinstance(lid, int):
            raise ScenarioError(f"{where}: id must be an integer")
        where = f"lanelet {lid}"
        succ = ld.get("successors", [])
        if not isinstance(succ, list) or any(isinstance(s, bool) or not isinstance(s, int) for s in succ):
            raise ScenarioError(f"{where}: successors must be a list of integer ids")
        lanelets.append(
            Lanelet(
                id=lid,
                left_boundary=_points(_require(ld, "left", where), where + ".left"),
                right_boundary=_points(_require(ld, "right", where), where + ".right"),
                successor_ids=list(succ),
                adjacent_left_id=_opt_id(ld.get("adj_left"), where + ".adj_left"),
                adjacent_right_id=_opt_id(ld.get("adj_right"), where + ".adj_right"),
            )
        )

    obstacles = []
    for k, od in enumerate(data.get("obstacles", [])):
        where = f"obstacles[{k}]"
        oid = _require(od, "id", where)
        if isinstance(oid, bool) or not isinstance(oid, int):
            raise ScenarioError(f"{where}: id must be an integer")
        where = f"obstacle {oid}"
        states = tuple(_state(sd, f"{where}.states[{j}]", j) for j, sd in enumerate(_require(od, "states", where)))
        obstacles.append(
            Obstacle(
                id=oid,
                kind=_require(od, "kind", where),
                length=_num(_require(od, "length", where), where + ".length"),
                width=_num(_require(od, "width", where), where + ".width"),
                states=states,
            )
        )

    pd = _require(data, "planning_problem", "scenario")
    goal_steps = _require(pd, "goal_steps", "planning_problem")
    if not (isinstance(goal_steps, list) and len(goal_steps) == 2):
        raise ScenarioError("planning_problem.goal_steps: expected a [t_lo, t_hi] pair")
    gv = pd.get("goal_velocity")
    if gv is not None and not (isinstance(gv, list) and len(gv) == 2):
        raise ScenarioError("planning_problem.goal_velocity: expected a [v_lo, v_hi] pair or null")
    goal = _points(_require(pd, "goal", "planning_problem"), "planning_problem.goal")
    problem = PlanningProblem(
        initial_state=_state(_require(pd, "initial", "planning_problem"), "planning_problem.initial"),
        goal_region=tuple((float(x), float(y)) for x, y in goal),
        goal_time_interval=(int(goal_steps[0]), int(goal_steps[1])),
        goal_velocity_interval=None if gv is None else (_num(gv[0], "goal_velocity"), _num(gv[1], "goal_velocity")),
    )
    return Scenario(lanelets=lanelets, obstacles=obstacles, problem=problem, dt=dt)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load and validate a scenario JSON file.

    Raises :class:`ScenarioError` on malformed JSON (with line/column) or
    on the first violated invariant.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    except (TypeError, AttributeError) as exc:
        raise ScenarioError(f"{path}: unexpected structure: {exc}") from None


def _state_to_dict(st: CartesianState, with_step: bool = True) -> dict:
    d = {"x": st.x, "y": st.y, "psi": st.psi, "v": st.v}
    if st.a != 0.0:
        d["a"] = st.a
    if st.kappa != 0.0:
        d["kappa"] = st.kappa
    if with_step:
        d = {"t": st.step, **d}
    return d


def scenario_to_dict(scenario: Scenario) -> dict:
    pp = scenario.problem
    return {
        "dt": scenario.dt,
        "lanelets": [
            {
                "id": la.id,
                "left": la.left_boundary.tolist(),
                "right": la.right_boundary.tolist(),
                "successors": list(la.successor_ids),
                "adj_left": la.adjacent_left_id,
                "adj_right": la.adjacent_right_id,
            }
            for la in scenario.lanelets
        ],
        "obstacles": [
            {
                "id": ob.id,
                "kind": ob.kind,
                "length": ob.length,
                "width": ob.width,
                "states": [_state_to_dict(st) for st in ob.states],
            }
            for ob in scenario.obstacles
        ],
        "planning_problem": {
            "initial": _state_to_dict(pp.initial_state, with_step=pp.initial_state.step != 0),
            "goal": [list(p) for p in pp.goal_region],
            "goal_steps": list(pp.goal_time_interval),
            "goal_velocity": None if pp.goal_velocity_interval is None else list(pp.goal_velocity_interval),
        },
    }


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1))
