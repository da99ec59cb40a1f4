import math

import numpy as np
import pytest

from frenetplan.cost import (
    COST_NAMES,
    CostContext,
    CostWeights,
    NonFiniteCostError,
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
    footprint_probability,
    total_cost,
)
from frenetplan.prediction import ObstaclePrediction
from frenetplan.refpath import FrenetState
from frenetplan.sampler import SamplingConfig, default_config_for, generate_bundle

from oracles import monte_carlo_footprint

T, DT = 3.0, 0.1
K = int(round(T / DT))


def cruise(path, v=10.0, d=0.0):
    cfg = SamplingConfig((T,), (d,), T, DT, v_values=(v,))
    return generate_bundle(FrenetState(20.0, v, d=d), cfg, path)[0]


def shadow(sample, offset, cov=np.eye(2)):
    """Prediction whose mean follows the sample at a fixed offset."""
    mean = np.column_stack([sample.x, sample.y]) + np.asarray(offset, float)
    return ObstaclePrediction(
        1, 4.5, 1.8, mean, np.zeros(K + 1), np.zeros(K + 1), np.broadcast_to(cov, (K + 1, 2, 2)).copy()
    )


def fixed(mean, cov=np.eye(2)):
    return ObstaclePrediction(
        1, 4.5, 1.8, np.tile(mean, (K + 1, 1)).astype(float), np.zeros(K + 1), np.zeros(K + 1), np.tile(cov, (K + 1, 1, 1))
    )


def ctx_with(preds=(), v_ref=10.0, length=4.5, width=1.8):
    return CostContext(v_ref, list(preds), T, DT, length, width)


def test_trivial_cruise_costs(straight_path):
    s = cruise(straight_path)
    ctx = ctx_with()
    assert cost_acceleration(s) == pytest.approx(0.0, abs=1e-9)
    assert cost_jerk(s) == pytest.approx(0.0, abs=1e-9)
    assert cost_dist_reference(s) == pytest.approx(0.0, abs=1e-9)
    assert cost_velocity_offset(s, ctx) == pytest.approx(0.0, abs=1e-9)
    assert cost_lateral_jerk(s) == pytest.approx(0.0, abs=1e-9)
    assert cost_longitudinal_jerk(s) == pytest.approx(0.0, abs=1e-9)


def test_constant_obstacle_distance(straight_path):
    s = cruise(straight_path)
    assert cost_dist_obstacle(s, ctx_with([shadow(s, (0.0, 10.0))])) == pytest.approx(0.03, abs=1e-9)


def test_constant_mahalanobis_distance(straight_path):
    s = cruise(straight_path)
    assert cost_collision_mahalanobis(s, ctx_with([shadow(s, (0.0, 2.0))])) == pytest.approx(0.75, abs=1e-9)


def test_velocity_offset_closed_form(straight_path):
    s = cruise(straight_path, v=12.0)
    # |12 - 10| over 3 s plus the squared terminal offset
    assert cost_velocity_offset(s, ctx_with(v_ref=10.0)) == pytest.approx(2.0 * 3.0 + 4.0, abs=1e-9)


def test_reference_distance_closed_form(straight_path):
    s = cruise(straight_path, d=1.5)
    assert cost_dist_reference(s) == pytest.approx(1.5**2 * 3.0, abs=1e-9)


def test_collision_probability_matches_monte_carlo(straight_path):
    # ego footprint 4 x 2 m whose center is 3 m from the obstacle mean, unit covariance
    s = cruise(straight_path)
    ctx = ctx_with([shadow(s, (0.0, 3.0))], length=4.0, width=2.0)
    p_mc = monte_carlo_footprint(np.zeros(2), 0.0, 2.0, 1.0, np.array([0.0, 3.0]), np.eye(2))
    expected = p_mc * T  # constant integrand over the horizon
    assert cost_collision_probability(s, ctx) == pytest.approx(expected, rel=0.05)


def test_footprint_probability_over_approximates_rotated():
    cov = np.array([[2.0, 0.6], [0.6, 0.5]])
    mean = np.array([1.0, 1.5])
    for psi in (0.3, 1.0, 2.2):
        p = footprint_probability(0.0, 0.0, psi, 2.0, 1.0, mean, cov)
        p_mc = monte_carlo_footprint(np.zeros(2), psi, 2.0, 1.0, mean, cov, n=400_000, seed=1)
        assert p >= p_mc - 3e-3
        assert 0.0 <= p <= 1.0


def test_collision_probability_bounded_by_horizon(straight_path):
    s = cruise(straight_path)
    preds = [shadow(s, (0.0, 0.0), cov=0.01 * np.eye(2)), shadow(s, (0.5, 0.0), cov=0.01 * np.eye(2))]
    j = cost_collision_probability(s, ctx_with(preds))
    assert 0.0 <= j <= len(preds) * T + 1e-12
    assert j > 0.9 * len(preds) * T


def test_moving_away_never_increases_obstacle_costs(straight_path):
    pred = fixed([60.0, 0.0], np.diag([2.0, 0.5]))
    ctx = ctx_with([pred])
    previous = None
    for d in (0.0, 0.5, 1.0, 2.0, 3.0):
        s = cruise(straight_path, d=d)
        now = (cost_dist_obstacle(s, ctx), cost_collision_probability(s, ctx), cost_collision_mahalanobis(s, ctx))
        if previous is not None:
            assert all(n <= p + 1e-15 for n, p in zip(now, previous))
        previous = now


def test_mahalanobis_cap_keeps_cost_finite(straight_path):
    s = cruise(straight_path)
    j = cost_collision_mahalanobis(s, ctx_with([shadow(s, (0.0, 0.0))]))
    # integrand capped at 1/0.1, weighted by the decaying ramp
    assert j == pytest.approx(10.0 * 1.5, abs=1e-9)


def random_weights(rng):
    return CostWeights(**{n: float(w) for n, w in zip(COST_NAMES, rng.uniform(0, 5, len(COST_NAMES)))})


@pytest.fixture(scope="module")
def costed_bundle(arc_path, vehicle):
    cur = FrenetState(30.0, 9.0, 0.3, 0.4)
    b = generate_bundle(cur, default_config_for(cur, vehicle, T, DT, 2), arc_path)
    preds = [fixed([b.x[0, 0] + 25.0, b.y[0, 0] + 8.0], np.diag([1.5, 0.4]))]
    return b, ctx_with(preds, v_ref=12.0)


def test_total_is_weighted_sum(costed_bundle):
    b, ctx = costed_bundle
    rng = np.random.default_rng(0)
    w = random_weights(rng)
    for row in range(0, len(b), 17):
        total, parts = total_cost(b[row], w, ctx)
        expected = 0.0
        for name in COST_NAMES:
            expected += getattr(w, name) * parts[name]
        assert total == pytest.approx(expected, abs=1e-12)
        assert b[row].total_cost == total
        assert all(v >= 0.0 and math.isfinite(v) for v in parts.values())


def test_weight_linearity(costed_bundle):
    b, ctx = costed_bundle
    w = random_weights(np.random.default_rng(1))
    evaluate_costs(b, w, ctx)
    base = b.total_cost.copy()
    costs = b.costs.copy()
    for k, name in enumerate(COST_NAMES):
        lam = 3.0
        changed = CostWeights(**{**w.as_dict(), name: lam * getattr(w, name)})
        evaluate_costs(b, changed, ctx)
        np.testing.assert_allclose(b.total_cost - base, (lam - 1.0) * getattr(w, name) * costs[:, k], rtol=1e-9, atol=1e-9)


def test_argmin_invariance_under_uniform_scaling(costed_bundle):
    b, ctx = costed_bundle
    rng = np.random.default_rng(2)
    for _ in range(100):
        rows = rng.choice(len(b), size=20, replace=False)
        w = random_weights(rng)
        lam = rng.uniform(0.01, 100.0)
        evaluate_costs(b, w, ctx, rows)
        order = rows[np.lexsort((rows, b.total_cost[rows]))]
        evaluate_costs(b, w.scaled(lam), ctx, rows)
        scaled_order = rows[np.lexsort((rows, b.total_cost[rows]))]
        assert order[0] == scaled_order[0]
        assert np.array_equal(order, scaled_order)


def test_non_finite_cost_raises(straight_path):
    s = cruise(straight_path)
    s.bundle.a[s.row, 5] = np.nan
    with pytest.raises(NonFiniteCostError):
        cost_acceleration(s)
    with pytest.raises(NonFiniteCostError):
        total_cost(s, CostWeights(acceleration=1.0), ctx_with())


@pytest.mark.parametrize("bad", [-1.0, math.inf, math.nan])
def test_invalid_weights(bad):
    with pytest.raises(ValueError):
        CostWeights(jerk=bad)
    with pytest.raises(ValueError):
        CostWeights.from_mapping({"speed": 1.0})


def test_short_prediction_rejected(straight_path):
    short = ObstaclePrediction(1, 4.5, 1.8, np.zeros((5, 2)), np.zeros(5), np.zeros(5), np.tile(np.eye(2), (5, 1, 1)))
    with pytest.raises(ValueError, match="horizon"):
        ctx_with([short])
