"""End-to-end acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.pytest_terminal_summary``).
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from frenetplan.bench import bench_case, run_benchmark, run_pipeline
from frenetplan.collision import check_collision, check_on_road
from frenetplan.config import load_config
from frenetplan.cost import (
    COST_NAMES,
    CostContext,
    CostWeights,
    cost_acceleration,
    cost_collision_mahalanobis,
    cost_collision_probability,
    cost_dist_obstacle,
    cost_dist_reference,
    cost_jerk,
    cost_lateral_jerk,
    cost_longitudinal_jerk,
    cost_velocity_offset,
    evaluate_costs,
    total_cost,
)
from frenetplan.feasibility import feasibility_flags
from frenetplan.fixtures import fixture_names, load_fixture, load_manifest
from frenetplan.planner import OPTIMAL, plan_cycle
from frenetplan.polynomial import evaluate, solve_quartic, solve_quintic
from frenetplan.prediction import ObstaclePrediction
from frenetplan.refpath import FrenetState, cartesian_to_frenet, frenet_to_cartesian
from frenetplan.sampler import SamplingConfig, default_config_for, generate_bundle
from frenetplan.sim import GOAL_FAMILY, AgentStatus, cycle_inputs, overtaking_study, run_scenario, setup_simulation

from oracles import (
    brute_force_feasibility,
    discrete_only_collision,
    fine_discrete_collision,
    monte_carlo_footprint,
    pose_sample,
    random_state_arrays,
    random_states,
    random_sweep_fixture,
    scripted_obstacle,
    tunneling_poses,
)
from conftest import two_lane_scenario

DT = 0.1


# 1 ----------------------------------------------------------------------------------------


def test_criterion_1_polynomials():
    t0 = time.perf_counter()
    rng = np.random.default_rng(100)
    worst = 0.0
    for _ in range(10_000):
        tau = rng.uniform(0.5, 5.0)
        start = rng.uniform(-10, 10, 3)
        end = rng.uniform(-10, 10, 3)
        q = solve_quintic(start, end, tau)
        got = np.array([evaluate(q, 0.0)[:3], evaluate(q, tau)[:3]])
        worst = max(worst, np.max(np.abs(got - [start, end])))
        r = solve_quartic(start, end[1:], tau)
        got = np.array([*evaluate(r, 0.0)[:3], *evaluate(r, tau)[1:3]])
        worst = max(worst, np.max(np.abs(got - [*start, *end[1:]])))
    assert worst < 1e-9

    c = solve_quintic((0, 0, 0), (1, 0, 0), 1.0).coeffs
    np.testing.assert_allclose(c, [0, 0, 0, 10, -15, 6], rtol=0, atol=1e-12)
    jerk = Polynomial(c).deriv(3)
    integral = (jerk**2).integ()
    assert abs(integral(1.0) - integral(0.0) - 720.0) < 1e-6
    assert time.perf_counter() - t0 < 5.0


# 2 ----------------------------------------------------------------------------------------


@pytest.mark.parametrize("which", ["straight_path", "arc_path"])
def test_criterion_2_round_trip(which, request):
    path = request.getfixturevalue(which)
    t0 = time.perf_counter()
    rng = np.random.default_rng(200)
    for f in random_states(path, 1000, rng):
        c = frenet_to_cartesian(path, f)
        again = frenet_to_cartesian(path, cartesian_to_frenet(path, c))
        assert math.hypot(again.x - c.x, again.y - c.y) < 1e-6
        assert abs(again.v - c.v) < 1e-5
    assert time.perf_counter() - t0 < 5.0


# 3 ----------------------------------------------------------------------------------------


def test_criterion_3_feasibility_oracle(vehicle):
    rng = np.random.default_rng(300)
    v, a, kappa, psi = random_state_arrays(rng, 1000, 31, vehicle, DT)
    flags = feasibility_flags(v, a, kappa, psi, DT, vehicle)
    mismatches = sum(
        flags[i].tolist() != brute_force_feasibility(v[i], a[i], kappa[i], psi[i], DT, vehicle) for i in range(1000)
    )
    assert mismatches == 0


# 4 ----------------------------------------------------------------------------------------

T = 3.0
K = 30


def _cruise(path, v=10.0, d=0.0):
    cfg = SamplingConfig((T,), (d,), T, DT, v_values=(v,))
    return generate_bundle(FrenetState(20.0, v, d=d), cfg, path)[0]


def _shadow(sample, offset, cov=np.eye(2)):
    mean = np.column_stack([sample.x, sample.y]) + np.asarray(offset, float)
    return ObstaclePrediction(1, 4.5, 1.8, mean, np.zeros(K + 1), np.zeros(K + 1), np.tile(cov, (K + 1, 1, 1)))


def test_criterion_4_costs(straight_path, arc_path, vehicle):
    s = _cruise(straight_path)
    ctx = CostContext(10.0, [], T, DT)
    for fn in (cost_acceleration, cost_jerk, cost_dist_reference, cost_lateral_jerk, cost_longitudinal_jerk):
        assert abs(fn(s)) < 1e-9
    assert abs(cost_velocity_offset(s, ctx)) < 1e-9
    assert abs(cost_velocity_offset(_cruise(straight_path, v=12.0), ctx) - 10.0) < 1e-9
    assert abs(cost_dist_reference(_cruise(straight_path, d=1.5)) - 1.5**2 * T) < 1e-9
    assert abs(cost_dist_obstacle(s, CostContext(10.0, [_shadow(s, (0.0, 10.0))], T, DT)) - 0.03) < 1e-9
    assert abs(cost_collision_mahalanobis(s, CostContext(10.0, [_shadow(s, (0.0, 2.0))], T, DT)) - 0.75) < 1e-9

    # footprint probability against a Monte-Carlo integral with 2e6 draws
    ctx = CostContext(10.0, [_shadow(s, (0.0, 3.0))], T, DT, 4.0, 2.0)
    p_mc = monte_carlo_footprint(np.zeros(2), 0.0, 2.0, 1.0, np.array([0.0, 3.0]), np.eye(2), n=2_000_000)
    assert cost_collision_probability(s, ctx) == pytest.approx(p_mc * T, rel=0.05)

    cur = FrenetState(30.0, 9.0, 0.3, 0.4)
    b = generate_bundle(cur, default_config_for(cur, vehicle, T, DT, 2), arc_path)
    pred = ObstaclePrediction(
        1, 4.5, 1.8, np.tile([b.x[0, 0] + 25.0, b.y[0, 0] + 8.0], (K + 1, 1)), np.zeros(K + 1), np.zeros(K + 1),
        np.tile(np.diag([1.5, 0.4]), (K + 1, 1, 1)),
    )
    ctx = CostContext(12.0, [pred], T, DT)
    rng = np.random.default_rng(400)
    for row in range(0, len(b), 23):
        w = CostWeights(**dict(zip(COST_NAMES, rng.uniform(0, 5, len(COST_NAMES)))))
        total, parts = total_cost(b[row], w, ctx)
        weighted = sum(getattr(w, n) * parts[n] for n in COST_NAMES)
        assert abs(total - weighted) < 1e-12

    for _ in range(100):
        rows = rng.choice(len(b), size=20, replace=False)
        w = CostWeights(**dict(zip(COST_NAMES, rng.uniform(0, 5, len(COST_NAMES)))))
        evaluate_costs(b, w, ctx, rows)
        best = rows[np.lexsort((rows, b.total_cost[rows]))][0]
        evaluate_costs(b, w.scaled(rng.uniform(0.01, 100.0)), ctx, rows)
        assert rows[np.lexsort((rows, b.total_cost[rows]))][0] == best


# 5 ----------------------------------------------------------------------------------------


def test_criterion_5_continuous_collision(vehicle):
    base = two_lane_scenario()
    dims = (vehicle.length, vehicle.width)

    def scenario_with(poses):
        return replace(base, obstacles=[scripted_obstacle(poses, 4.5, 1.8)])

    ego, ob = tunneling_poses()
    assert not discrete_only_collision(ego, ob, dims, (4.5, 1.8))
    assert not check_collision(pose_sample(ego), scenario_with(ob), vehicle)

    rng = np.random.default_rng(500)
    false_negatives = 0
    for _ in range(500):
        ego, ob = random_sweep_fixture(rng)
        if fine_discrete_collision(ego, ob, dims, (4.5, 1.8), substeps=100):
            false_negatives += check_collision(pose_sample(ego), scenario_with(ob), vehicle)
    assert false_negatives == 0


# 6 ----------------------------------------------------------------------------------------


def _plan(setup, state, step, workers):
    samp, ctx, sweeps = cycle_inputs(setup, state, step)
    return plan_cycle(
        state, setup.scenario, setup.path, samp, setup.weights, setup.vehicle, ctx,
        step=step, boundary=setup.boundary, sweeps=sweeps, workers=workers,
    )


def test_criterion_6_determinism_and_soundness():
    config = load_config()
    checked = 0
    names = ["overtake", "oncoming", "lead_vehicle", "blocked_lane", "curve"]
    for name in names:
        sc = load_fixture(name)
        setup = setup_simulation(sc, config)
        log = run_scenario(sc, config=config)
        states = log.states()
        # ten cycles per fixture spread over the run
        picks = np.linspace(0, len(states) - 2, 10).astype(int)
        for i in picks:
            state, step = states[i], log.steps[i].step
            serial = _plan(setup, state, step, 1)
            parallel = _plan(setup, state, step, 4)
            assert serial.signature() == parallel.signature() == _plan(setup, state, step, 1).signature()
            assert serial.category == OPTIMAL
            c = serial.chosen
            assert all(brute_force_feasibility(c.v, c.a, c.kappa, c.psi, c.dt, setup.vehicle))
            assert check_collision(c, sc, setup.vehicle, start_step=step)
            assert check_on_road(c, setup.boundary, setup.vehicle)
            checked += 1
    assert checked == 50


# 7 ----------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def study_rows():
    return overtaking_study(load_fixture("overtake"))


def _row(rows, v, d, cp):
    return next(r for r in rows if (r["velocity_offset"], r["dist_to_obstacle"], r["collision_probability"]) == (v, d, cp))


def test_criterion_7a_clearance_grows_with_collision_weight(study_rows):
    clear = [_row(study_rows, 1.0, 0.0, cp)["min_clearance"] for cp in (2.0, 100.0, 1000.0)]
    assert all(map(math.isfinite, clear))
    assert clear[0] < clear[1] < clear[2]


def test_criterion_7b_obstacle_distance_weight_stays_behind(study_rows):
    for v in (0.05, 0.1):
        for cp in (2.0, 100.0, 1000.0):
            assert not _row(study_rows, v, 100.0, cp)["overtook"]


def test_criterion_7c_no_collisions_on_grid(study_rows):
    assert len(study_rows) == 18
    assert not any(r["collision"] for r in study_rows)
    assert all(r["wall_time_s"] <= 60.0 for r in study_rows)


def test_criterion_7d_disabled_key_costs_fail():
    rows = overtaking_study(load_fixture("overtake"), {"velocity_offset": [0.0], "collision_probability": [0.0]})
    assert AgentStatus(rows[0]["status"]) not in GOAL_FAMILY
    assert rows[0]["completion_time"] is None
    assert rows[0]["wall_time_s"] <= 60.0


# 8 ----------------------------------------------------------------------------------------


def test_criterion_8_timing():
    case = bench_case()
    _, serial = run_pipeline(case, 13000, workers=1)
    _, parallel = run_pipeline(case, 13000, workers=4)
    for field in ("x", "y", "psi", "v", "a", "kappa", "total_cost"):
        assert np.array_equal(getattr(serial, field), getattr(parallel, field), equal_nan=True)

    small = run_benchmark([50], repetitions=200, warmup=20, case=case)
    mid = run_benchmark([800], repetitions=30, warmup=5, case=case)
    large = run_benchmark([13000], repetitions=10, warmup=2, case=case)

    def total(rows, mode):
        return next(r for r in rows if r.stage == "total" and r.mode == mode)

    assert total(mid, "serial").median_ms < 100.0
    assert total(large, "parallel").speedup > total(small, "parallel").speedup


# 9 ----------------------------------------------------------------------------------------


def test_criterion_9_scenario_suite():
    manifest = load_manifest()
    assert len(fixture_names()) >= 10
    unexpected = []
    for name, entry in manifest.items():
        log = run_scenario(load_fixture(name), name=name)
        expected = entry["expected"]
        if log.status.value not in expected:
            unexpected.append((name, log.status.value, expected))
        if log.status == AgentStatus.COLLISION and "Collision" not in expected:
            unexpected.append((name, "unexpected collision", expected))
    assert unexpected == []
