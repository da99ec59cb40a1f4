import math

import numpy as np
import pytest

from frenetplan.prediction import PredictionParams, predict, predict_all
from frenetplan.scenario import CartesianState, Obstacle

from conftest import moving_obstacle, static_obstacle, two_lane_scenario


def single_state(x, y, psi, v, kind="dynamic"):
    return Obstacle(1, kind, 4.5, 1.8, (CartesianState(x, y, psi, v, step=0),))


def eigen_ok(cov):
    return np.all(np.linalg.eigvalsh(cov) >= -1e-12)


def test_obstacle_at_rest_keeps_mean_covariance_grows():
    p = predict(single_state(3.0, 4.0, 0.3, 0.0), 0, 30, 0.1)
    assert np.all(p.mean == p.mean[0])
    trace = np.trace(p.cov, axis1=1, axis2=2)
    np.testing.assert_allclose(np.diff(trace), 0.1 * (0.5 + 0.1), atol=1e-12)


def test_constant_velocity_advance():
    p = predict(single_state(0.0, 0.0, 0.0, 13.0), 0, 30, 0.1)
    np.testing.assert_allclose(np.diff(p.mean[:, 0]), 1.3, atol=1e-12)
    np.testing.assert_allclose(p.mean[:, 1], 0.0, atol=1e-12)


def test_heading_aligns_major_axis():
    p = predict(single_state(0.0, 0.0, math.pi / 2, 5.0), 0, 30, 0.1)
    for cov in p.cov[1:]:
        lam, vec = np.linalg.eigh(cov)
        major = vec[:, np.argmax(lam)]
        assert abs(abs(major[1]) - 1.0) < 1e-9


def test_static_obstacle_degenerate_prediction():
    sc = two_lane_scenario([static_obstacle(4, 50.0, 1.0, 0.2)])
    p = predict(sc.obstacles[0], 7, 30, 0.1)
    assert np.all(p.mean == p.mean[0])
    assert np.all(p.cov == p.cov[0])
    assert np.all(p.velocity == 0.0)


def test_ignores_script_after_now():
    sc = two_lane_scenario([moving_obstacle(1, 0.0, 0.0, 10.0, 0.0, 100)])
    ob = sc.obstacles[0]
    p = predict(ob, 20, 10, 0.1)
    assert p.mean[0].tolist() == pytest.approx([ob.states[20].x, ob.states[20].y])
    assert len(p) == 11


@pytest.mark.parametrize("seed", range(20))
def test_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-50, 50, 2)
    psi = rng.uniform(-math.pi, math.pi)
    v = rng.uniform(0, 20)
    alpha = rng.uniform(-math.pi, math.pi)
    r = np.array([[math.cos(alpha), -math.sin(alpha)], [math.sin(alpha), math.cos(alpha)]])
    base = predict(single_state(x, y, psi, v), 0, 30, 0.1)
    rx, ry = r @ [x, y]
    rotated = predict(single_state(rx, ry, psi + alpha, v), 0, 30, 0.1)
    np.testing.assert_allclose(rotated.mean, base.mean @ r.T, atol=1e-9)
    np.testing.assert_allclose(rotated.cov, r @ base.cov @ r.T, atol=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_psd_and_trace_monotone(seed):
    rng = np.random.default_rng(100 + seed)
    params = PredictionParams(tuple(rng.uniform(0, 1, 2)), tuple(rng.uniform(0, 2, 2)))
    p = predict(single_state(0, 0, rng.uniform(-3, 3), rng.uniform(0, 30)), 0, 50, 0.1, params)
    assert all(eigen_ok(c) for c in p.cov)
    np.testing.assert_array_equal(p.cov, np.swapaxes(p.cov, 1, 2))
    assert np.all(np.diff(np.trace(p.cov, axis1=1, axis2=2)) >= 0)


def test_predict_all_order():
    sc = two_lane_scenario([moving_obstacle(3, 0, 0, 5, 0, 5), static_obstacle(9, 20, 0, 0)])
    assert [p.obstacle_id for p in predict_all(sc.obstacles, 0, 10, 0.1)] == [3, 9]
