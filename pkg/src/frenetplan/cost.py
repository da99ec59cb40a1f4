"""Partial cost terms and their weighted sum.

Every term integrates over ``[0, T]`` with the trapezoidal rule at the
sample step ``dt``. The kernels take ``(N, K+1)`` arrays; the
``cost_*`` functions are per-sample wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtr

from .prediction import ObstaclePrediction

__all__ = [
    "COST_NAMES",
    "CostWeights",
    "CostContext",
    "NonFiniteCostError",
    "cost_matrix",
    "weighted_total",
    "evaluate_costs",
    "collision_probability_steps",
    "footprint_probability",
    "cost_acceleration",
    "cost_jerk",
    "cost_lateral_jerk",
    "cost_longitudinal_jerk",
    "cost_velocity_offset",
    "cost_dist_reference",
    "cost_dist_obstacle",
    "cost_collision_probability",
    "cost_collision_mahalanobis",
    "total_cost",
]

COST_NAMES = (
    "acceleration",
    "jerk",
    "lateral_jerk",
    "longitudinal_jerk",
    "velocity_offset",
    "dist_to_reference",
    "dist_to_obstacle",
    "collision_probability",
    "collision_mahalanobis",
)

MIN_OBSTACLE_DISTANCE = 0.1  # [m], clamp for the inverse-square term
MIN_MAHALANOBIS = 0.1


class NonFiniteCostError(ArithmeticError):
    """A cost integrand was NaN or infinite."""


@dataclass(frozen=True)
class CostWeights:
    acceleration: float = 0.0
    jerk: float = 0.0
    lateral_jerk: float = 0.0
    longitudinal_jerk: float = 0.0
    velocity_offset: float = 0.0
    dist_to_reference: float = 0.0
    dist_to_obstacle: float = 0.0
    collision_probability: float = 0.0
    collision_mahalanobis: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            w = getattr(self, f.name)
            if not (np.isfinite(w) and w >= 0):
                raise ValueError(f"weight {f.name} must be finite and non-negative, got {w}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "CostWeights":
        unknown = set(mapping) - set(COST_NAMES)
        if unknown:
            raise ValueError(f"unknown cost weights: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in mapping.items()})

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in COST_NAMES], dtype=float)

    def as_dict(self) -> Dict[str, float]:
        return {n: getattr(self, n) for n in COST_NAMES}

    def scaled(self, factor: float) -> "CostWeights":
        return CostWeights(**{n: factor * getattr(self, n) for n in COST_NAMES})


@dataclass(frozen=True, eq=False)
class CostContext:
    """Shared inputs of the cost terms.

    ``v_ref`` is a scalar or a ``(K+1,)`` profile; ``ego_length`` and
    ``ego_width`` give the footprint integrated by the collision
    probability term.
    """

    v_ref: Union[float, np.ndarray]
    predictions: Sequence[ObstaclePrediction]
    T: float
    dt: float
    ego_length: float = 4.5
    ego_width: float = 1.8
    path: object = None

    def __post_init__(self):
        steps = int(round(self.T / self.dt))
        for p in self.predictions:
            if len(p) < steps + 1:
                raise ValueError(f"prediction for obstacle {p.obstacle_id} does not cover the horizon")


def _trapz(y, dt):
    return np.trapezoid(y, dx=dt, axis=-1)


def _acc_cost(a, dt):
    return _trapz(a * a, dt)


def _jerk_cost(a, dt):
    jerk = np.gradient(a, dt, axis=-1)
    return _trapz(jerk * jerk, dt)


def _velocity_offset(v, v_ref, dt):
    v_ref = np.broadcast_to(np.asarray(v_ref, dtype=float), v.shape[-1:])
    return _trapz(np.abs(v - v_ref), dt) + (v[..., -1] - v_ref[-1]) ** 2


def footprint_probability(cx, cy, psi, half_length, half_width, mean, cov):
    """Gaussian mass ``N(mean, cov)`` over a rectangle's eigenframe bounding box.

    The footprint (center ``cx, cy``, heading ``psi``) is expressed in the
    covariance eigenframe and replaced by its axis-aligned bounding box
    there, which makes the integral a product of two 1-D normal CDF
    differences. Over-approximates the exact rectangle integral; exact
    when the footprint is aligned with the eigenvectors.
    ``mean`` is ``(..., 2)`` and ``cov`` ``(..., 2, 2)``, broadcasting
    against ``cx``.
    """
    lam, vec = np.linalg.eigh(cov)
    sig = np.sqrt(np.maximum(lam, 1e-18))
    rx = cx - mean[..., 0]
    ry = cy - mean[..., 1]
    ux, uy = np.cos(psi), np.sin(psi)
    prob = 1.0
    for j in range(2):
        ex, ey = vec[..., 0, j], vec[..., 1, j]
        center = rx * ex + ry * ey
        extent = half_length * np.abs(ux * ex + uy * ey) + half_width * np.abs(-uy * ex + ux * ey)
        s = sig[..., j]
        prob = prob * (ndtr((center + extent) / s) - ndtr((center - extent) / s))
    return prob


def collision_probability_steps(x, y, psi, ctx: CostContext) -> np.ndarray:
    """Per-step collision probability, shape ``(N, n_obstacles, K+1)``."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    psi = np.atleast_2d(psi)
    n, m = x.shape
    out = np.zeros((n, len(ctx.predictions), m))
    for j, pred in enumerate(ctx.predictions):
        out[:, j, :] = footprint_probability(
            x, y, psi, 0.5 * ctx.ego_length, 0.5 * ctx.ego_width, pred.mean[:m], pred.cov[:m]
        )
    return out


def _obstacle_costs(x, y, psi, t, ctx: CostContext):
    n = x.shape[0]
    m = x.shape[1]
    j_do = np.zeros(n)
    j_cp = np.zeros(n)
    j_cm = np.zeros(n)
    decay = 1.0 - t / ctx.T
    for pred in ctx.predictions:
        mean = pred.mean[:m]
        cov = pred.cov[:m]
        rx = x - mean[:, 0]
        ry = y - mean[:, 1]
        dist = np.maximum(np.hypot(rx, ry), MIN_OBSTACLE_DISTANCE)
        j_do = j_do + _trapz(1.0 / (dist * dist), ctx.dt)

        p = footprint_probability(x, y, psi, 0.5 * ctx.ego_length, 0.5 * ctx.ego_width, mean, cov)
        j_cp = j_cp + _trapz(p, ctx.dt)

        a, b, c = cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]
        det = a * c - b * b
        dm2 = (c * rx * rx - 2.0 * b * rx * ry + a * ry * ry) / det
        dm = np.maximum(np.sqrt(np.maximum(dm2, 0.0)), MIN_MAHALANOBIS)
        j_cm = j_cm + _trapz(decay / dm, ctx.dt)
    return j_do, j_cp, j_cm


def cost_matrix(bundle, ctx: CostContext) -> np.ndarray:
    """``(N, 9)`` partial costs ordered like :data:`COST_NAMES`."""
    dt = ctx.dt
    m = bundle.x.shape[1]
    t = np.arange(m) * dt
    j_do, j_cp, j_cm = _obstacle_costs(bundle.x, bundle.y, bundle.psi, t, ctx)
    return np.column_stack(
        [
            _acc_cost(bundle.a, dt),
            _jerk_cost(bundle.a, dt),
            _trapz(bundle.d_dddot * bundle.d_dddot, dt),
            _trapz(bundle.s_dddot * bundle.s_dddot, dt),
            _velocity_offset(bundle.v, ctx.v_ref, dt),
            _trapz(bundle.d * bundle.d, dt),
            j_do,
            j_cp,
            j_cm,
        ]
    )


def weighted_total(costs: np.ndarray, weights: CostWeights) -> np.ndarray:
    """Sum ``w_i * J_i`` accumulated left to right in :data:`COST_NAMES` order."""
    w = weights.as_array()
    total = np.zeros(costs.shape[:-1])
    for i in range(len(COST_NAMES)):
        total = total + w[i] * costs[..., i]
    return total


def evaluate_costs(bundle, weights: CostWeights, ctx: CostContext, rows=None) -> np.ndarray:
    """Cost the given rows (default: all) in place; returns a finite-cost mask for those rows.

    Rows whose breakdown is non-finite get ``total_cost = inf``.
    """
    n = len(bundle)
    if bundle.costs is None:
        bundle.costs = np.full((n, len(COST_NAMES)), np.nan)
        bundle.total_cost = np.full(n, np.nan)
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=int)
    if len(rows) == 0:
        return np.zeros(0, dtype=bool)
    sub = bundle.take(rows) if len(rows) != n else bundle
    costs = cost_matrix(sub, ctx)
    finite = np.all(np.isfinite(costs), axis=1)
    total = np.where(finite, weighted_total(np.where(np.isfinite(costs), costs, 0.0), weights), np.inf)
    bundle.costs[rows] = costs
    bundle.total_cost[rows] = total
    return finite


# -- per-sample API ------------------------------------------------------------------------


def _finite(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise NonFiniteCostError(f"{name} cost is not finite")
    return value


def _row(sample, name):
    return np.atleast_2d(getattr(sample, name))


def cost_acceleration(sample) -> float:
    return _finite(_acc_cost(_row(sample, "a"), sample.dt)[0], "acceleration")


def cost_jerk(sample) -> float:
    return _finite(_jerk_cost(_row(sample, "a"), sample.dt)[0], "jerk")


def cost_lateral_jerk(sample) -> float:
    j = _row(sample, "d_dddot")
    return _finite(_trapz(j * j, sample.dt)[0], "lateral_jerk")


def cost_longitudinal_jerk(sample) -> float:
    j = _row(sample, "s_dddot")
    return _finite(_trapz(j * j, sample.dt)[0], "longitudinal_jerk")


def cost_velocity_offset(sample, ctx: CostContext) -> float:
    return _finite(_velocity_offset(_row(sample, "v"), ctx.v_ref, sample.dt)[0], "velocity_offset")


def cost_dist_reference(sample) -> float:
    d = _row(sample, "d")
    return _finite(_trapz(d * d, sample.dt)[0], "dist_to_reference")


def _sample_obstacle_costs(sample, ctx):
    x, y, psi = _row(sample, "x"), _row(sample, "y"), _row(sample, "psi")
    t = np.arange(x.shape[1]) * ctx.dt
    return _obstacle_costs(x, y, psi, t, ctx)


def cost_dist_obstacle(sample, ctx: CostContext) -> float:
    return _finite(_sample_obstacle_costs(sample, ctx)[0][0], "dist_to_obstacle")


def cost_collision_probability(sample, ctx: CostContext) -> float:
    return _finite(_sample_obstacle_costs(sample, ctx)[1][0], "collision_probability")


def cost_collision_mahalanobis(sample, ctx: CostContext) -> float:
    return _finite(_sample_obstacle_costs(sample, ctx)[2][0], "collision_mahalanobis")


def total_cost(sample, weights: CostWeights, ctx: CostContext) -> Tuple[float, Dict[str, float]]:
    """Weighted total and per-term breakdown; both are stored on the sample."""
    bundle, row = sample.bundle, sample.row
    finite = evaluate_costs(bundle, weights, ctx, rows=[row])
    if not finite[0]:
        bad = [n for n, c in zip(COST_NAMES, bundle.costs[row]) if not np.isfinite(c)]
        raise NonFiniteCostError(f"non-finite cost terms: {bad}")
    return float(bundle.total_cost[row]), dict(zip(COST_NAMES, (float(c) for c in bundle.costs[row])))
