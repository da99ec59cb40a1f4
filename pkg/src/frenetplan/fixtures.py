"""Synthetic scenario suite shipped with the package.

The JSON files under ``data/scenarios`` are generated by :func:`write_suite`
and listed in ``manifest.json`` together with the status each run is
expected to end in. Regenerate with ``python -m frenetplan.fixtures``.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .scenario import Scenario, load_scenario, save_scenario, scenario_from_dict

__all__ = [
    "LANE_WIDTH",
    "straight_centerline",
    "arc_centerline",
    "lane_lanelets",
    "moving_obstacle",
    "static_obstacle",
    "build_suite",
    "write_suite",
    "fixture_names",
    "load_fixture",
    "load_manifest",
    "scenario_dir",
]

LANE_WIDTH = 3.5
DT = 0.1


def straight_centerline(length: float, spacing: float = 5.0, x0: float = 0.0):
    """Points and unit normals (left) of a straight road along +x."""
    n = int(round(length / spacing)) + 1
    x = np.linspace(x0, x0 + length, n)
    pts = np.column_stack([x, np.zeros(n)])
    normals = np.tile([0.0, 1.0], (n, 1))
    return pts, normals


def arc_centerline(straight_in: float, radius: float, angle: float, straight_out: float, spacing: float = 2.0):
    """Straight, left-turning arc of ``radius`` over ``angle`` rad, straight."""
    pts: List[Tuple[float, float]] = []
    headings: List[float] = []
    for x in np.arange(0.0, straight_in, spacing):
        pts.append((x, 0.0))
        headings.append(0.0)
    n_arc = max(int(math.ceil(radius * angle / spacing)), 2)
    for phi in np.linspace(0.0, angle, n_arc, endpoint=False):
        pts.append((straight_in + radius * math.sin(phi), radius * (1.0 - math.cos(phi))))
        headings.append(phi)
    ex, ey = straight_in + radius * math.sin(angle), radius * (1.0 - math.cos(angle))
    for k in range(int(round(straight_out / spacing)) + 1):
        pts.append((ex + k * spacing * math.cos(angle), ey + k * spacing * math.sin(angle)))
        headings.append(angle)
    h = np.array(headings)
    return np.array(pts), np.column_stack([-np.sin(h), np.cos(h)])


def lane_lanelets(pts: np.ndarray, normals: np.ndarray, n_lanes: int, width: float = LANE_WIDTH) -> List[dict]:
    """Side-by-side lanelets, lane 0 centered on ``pts`` and lane ``i`` to its left.

    Shared boundaries are computed from the same expression so adjacent
    lanelets have bit-identical coordinates.
    """

    def edge(k: int) -> list:
        off = (k - 1) * width / 2.0  # boundary k sits between lanes (k-1)/2 and (k+1)/2
        return (pts + off * normals).round(9).tolist()

    out = []
    for i in range(n_lanes):
        out.append(
            {
                "id": i + 1,
                "left": edge(2 * i + 2),
                "right": edge(2 * i),
                "successors": [],
                "adj_left": i + 2 if i + 1 < n_lanes else None,
                "adj_right": i if i > 0 else None,
            }
        )
    return out


def moving_obstacle(oid: int, x0: float, y0: float, v: float, psi: float, steps: int, length=4.5, width=1.8) -> dict:
    """Constant-velocity vehicle recorded for ``steps + 1`` time steps."""
    states = []
    for k in range(steps + 1):
        t = k * DT
        states.append(
            {"x": x0 + v * math.cos(psi) * t, "y": y0 + v * math.sin(psi) * t, "psi": psi, "v": v, "t": k}
        )
    return {"id": oid, "kind": "dynamic", "length": length, "width": width, "states": states}


def static_obstacle(oid: int, x: float, y: float, psi: float = 0.0, length=4.5, width=1.8) -> dict:
    return {"id": oid, "kind": "static", "length": length, "width": width, "states": [{"x": x, "y": y, "psi": psi}]}


def _box(x0: float, x1: float, y0: float, y1: float) -> list:
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def _straight(n_lanes: int, length: float) -> list:
    pts, normals = straight_centerline(length)
    return lane_lanelets(pts, normals, n_lanes)


def _problem(x, y, v, goal, goal_steps, goal_velocity=None, psi=0.0) -> dict:
    return {
        "initial": {"x": x, "y": y, "psi": psi, "v": v, "a": 0.0},
        "goal": goal,
        "goal_steps": list(goal_steps),
        "goal_velocity": goal_velocity,
    }


def _overtake(oncoming: bool) -> dict:
    """Two-lane road, lead vehicle at 13 m/s in the start lane, goal across both lanes."""
    half = LANE_WIDTH / 2.0
    obstacles = [moving_obstacle(1, 30.0, 0.0, 13.0, 0.0, 500)]
    if oncoming:
        obstacles.append(moving_obstacle(2, 430.0, LANE_WIDTH, 10.0, math.pi, 500))
    return {
        "dt": DT,
        "lanelets": _straight(2, 450.0),
        "obstacles": obstacles,
        "planning_problem": _problem(5.0, 0.0, 10.0, _box(300.0, 325.0, -half, LANE_WIDTH + half), (150, 250)),
    }


def build_suite() -> Dict[str, Tuple[dict, dict]]:
    """``name -> (scenario dict, manifest entry)``."""
    half = LANE_WIDTH / 2.0
    suite: Dict[str, Tuple[dict, dict]] = {}

    def add(name, data, expected, description, config=None):
        entry = {"expected": expected, "description": description}
        if config:
            entry["config"] = config
        suite[name] = (data, entry)

    add(
        "straight_open",
        {"dt": DT, "lanelets": _straight(2, 300.0), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(140.0, 170.0, -half, half), (60, 200))},
        ["GoalReached"],
        "empty two-lane road, goal ahead in the start lane",
    )
    add(
        "straight_early",
        {"dt": DT, "lanelets": _straight(2, 300.0), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(140.0, 170.0, -half, half), (150, 250))},
        ["GoalReachedFasterThanTargetTime"],
        "goal window opens long after a free-flow arrival",
    )
    add(
        "straight_late",
        {"dt": DT, "lanelets": _straight(2, 200.0), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(60.0, 80.0, -half, half), (10, 30))},
        ["GoalReachedOutsideTargetTime"],
        "goal window closes before the goal can be reached",
    )
    pts, normals = arc_centerline(30.0, 60.0, math.pi / 2.0, 120.0)
    gx, gy = 30.0 + 60.0, 60.0
    add(
        "curve",
        {"dt": DT, "lanelets": lane_lanelets(pts, normals, 1), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(gx - half, gx + half, gy + 20.0, gy + 40.0), (40, 250))},
        ["GoalReached"],
        "single lane with a 60 m radius quarter turn",
    )
    add(
        "lead_vehicle",
        {"dt": DT, "lanelets": _straight(1, 400.0), "obstacles": [moving_obstacle(1, 35.0, 0.0, 8.0, 0.0, 300)],
         "planning_problem": _problem(5.0, 0.0, 8.0, _box(180.0, 210.0, -half, half), (60, 300))},
        ["GoalReached"],
        "single lane, slower vehicle ahead that cannot be passed",
    )
    add("overtake", _overtake(False), ["GoalReached"], "two lanes, slower lead vehicle in the start lane")
    add("oncoming", _overtake(True), ["GoalReached"], "overtake with an oncoming vehicle in the left lane")
    add(
        "blocked_lane",
        {"dt": DT, "lanelets": _straight(2, 300.0), "obstacles": [static_obstacle(1, 70.0, 0.0)],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(140.0, 170.0, -half, LANE_WIDTH + half), (40, 200))},
        ["GoalReached"],
        "parked vehicle in the start lane, left lane free",
    )
    add(
        "stop_goal",
        {"dt": DT, "lanelets": _straight(1, 250.0), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(100.0, 120.0, -half, half), (0, 300), goal_velocity=[0.0, 1.0])},
        ["GoalReached"],
        "come to a halt inside the goal region",
    )
    add(
        "time_limit",
        {"dt": DT, "lanelets": _straight(1, 900.0), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(700.0, 720.0, -half, half), (20, 40))},
        ["TimeLimitReached"],
        "goal too far away for the time window plus grace period",
    )
    add(
        "missed_target",
        {"dt": DT, "lanelets": _straight(1, 300.0), "obstacles": [],
         "planning_problem": _problem(5.0, 0.0, 10.0, _box(100.0, 120.0, -half, half), (0, 300), goal_velocity=[25.0, 30.0])},
        ["MissedTarget"],
        "goal speed above the target speed, so the goal region is passed",
    )
    add(
        "wall",
        {"dt": DT, "lanelets": _straight(2, 200.0),
         "obstacles": [static_obstacle(1, 12.0, 0.0, math.pi / 2.0, length=8.0, width=1.0),
                       static_obstacle(2, 12.0, LANE_WIDTH, math.pi / 2.0, length=8.0, width=1.0)],
         "planning_problem": _problem(5.0, 0.0, 15.0, _box(140.0, 170.0, -half, half), (40, 200))},
        ["Collision", "Error"],
        "wall across all lanes just ahead; unavoidable",
    )
    return suite


def scenario_dir():
    return resources.files("frenetplan").joinpath("data/scenarios")


def write_suite(directory: Optional[Path] = None) -> Path:
    directory = Path(directory) if directory is not None else Path(str(scenario_dir()))
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for name, (data, entry) in build_suite().items():
        save_scenario(scenario_from_dict(data), directory / f"{name}.json")
        manifest[name] = entry
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return directory


def load_manifest() -> Dict[str, dict]:
    return json.loads(scenario_dir().joinpath("manifest.json").read_text())


def fixture_names() -> List[str]:
    return sorted(load_manifest())


def load_fixture(name: str) -> Scenario:
    names = fixture_names()
    if name not in names:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(names)}")
    with resources.as_file(scenario_dir().joinpath(f"{name}.json")) as path:
        return load_scenario(path)


if __name__ == "__main__":
    print(write_suite())
