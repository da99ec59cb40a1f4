import math

import numpy as np
import pytest

from frenetplan.config import load_config
from frenetplan.fixtures import LANE_WIDTH, _box, _problem, _straight, moving_obstacle, static_obstacle
from frenetplan.refpath import reference_path_from_points
from frenetplan.scenario import scenario_from_dict


def straight_points(length=200.0, spacing=1.0):
    x = np.arange(0.0, length + spacing / 2, spacing)
    return np.column_stack([x, np.zeros_like(x)])


def arc_points(radius=50.0, angle=math.pi, spacing=1.0):
    n = int(radius * angle / spacing) + 1
    phi = np.linspace(0.0, angle, n)
    return np.column_stack([radius * np.sin(phi), radius * (1.0 - np.cos(phi))])


@pytest.fixture(scope="session")
def straight_path():
    return reference_path_from_points(straight_points())


@pytest.fixture(scope="session")
def arc_path():
    return reference_path_from_points(arc_points())


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def vehicle(config):
    return config.vehicle


def two_lane_scenario(obstacles=(), length=300.0, goal=(140.0, 170.0), v0=10.0, goal_steps=(40, 200)):
    half = LANE_WIDTH / 2.0
    return scenario_from_dict(
        {
            "dt": 0.1,
            "lanelets": _straight(2, length),
            "obstacles": list(obstacles),
            "planning_problem": _problem(5.0, 0.0, v0, _box(goal[0], goal[1], -half, half), goal_steps),
        }
    )


@pytest.fixture
def empty_road():
    return two_lane_scenario()


@pytest.fixture
def lead_road():
    return two_lane_scenario([moving_obstacle(1, 30.0, 0.0, 8.0, 0.0, 200)])


__all__ = ["straight_points", "arc_points", "two_lane_scenario", "moving_obstacle", "static_obstacle"]


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    verdicts = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion_" not in rep.nodeid or rep.when != "call" and outcome == "passed":
                continue
            name = rep.nodeid.split("::")[-1][len("test_criterion_"):]
            key = name.split("_")[0]
            ok = verdicts.get(key, True) and outcome == "passed"
            verdicts[key] = ok
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(verdicts, key=lambda k: (int(k[0]), k)):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if verdicts[key] else 'FAIL'}")
