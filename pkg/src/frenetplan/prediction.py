"""Constant-velocity obstacle prediction with growing position covariance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import Obstacle, obstacle_state_at

__all__ = ["PredictionParams", "ObstaclePrediction", "predict", "predict_all"]


@dataclass(frozen=True)
class PredictionParams:
    """Heading-frame covariance model: ``Sigma(k) = R (sigma0 + k dt q) R^T``.

    ``sigma0`` [m^2] and ``q`` [m^2/s] are (longitudinal, lateral) diagonals.
    """

    sigma0: Sequence[float] = (0.1, 0.05)
    q: Sequence[float] = (0.5, 0.1)


@dataclass(frozen=True, eq=False)
class ObstaclePrediction:
    obstacle_id: int
    length: float
    width: float
    mean: np.ndarray  # (K+1, 2)
    heading: np.ndarray  # (K+1,)
    velocity: np.ndarray  # (K+1,)
    cov: np.ndarray  # (K+1, 2, 2)

    def __len__(self):
        return len(self.heading)


def _rotation(psi):
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s], [s, c]])


def predict(obstacle: Obstacle, now_step: int, horizon_steps: int, dt: float, params: PredictionParams = None) -> ObstaclePrediction:
    """Propagate ``obstacle`` from ``now_step`` for ``horizon_steps`` steps.

    Only the state at ``now_step`` is read; recorded future states are
    ignored. Static obstacles keep a fixed pose and covariance ``sigma0``.
    """
    params = params or PredictionParams()
    st = obstacle_state_at(obstacle, now_step, dt)
    k = np.arange(horizon_steps + 1)
    if obstacle.is_static:
        v = 0.0
        growth = np.zeros_like(k, dtype=float)
    else:
        v = st.v
        growth = k * dt
    elapsed = k * dt
    mean = np.column_stack([st.x + v * np.cos(st.psi) * elapsed, st.y + v * np.sin(st.psi) * elapsed])
    local = np.zeros((len(k), 2, 2))
    local[:, 0, 0] = params.sigma0[0] + growth * params.q[0]
    local[:, 1, 1] = params.sigma0[1] + growth * params.q[1]
    r = _rotation(st.psi)
    cov = r @ local @ r.T
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    return ObstaclePrediction(
        obstacle_id=obstacle.id,
        length=obstacle.length,
        width=obstacle.width,
        mean=mean,
        heading=np.full(len(k), st.psi),
        velocity=np.full(len(k), float(v)),
        cov=cov,
    )


def predict_all(obstacles, now_step: int, horizon_steps: int, dt: float, params: PredictionParams = None):
    return [predict(ob, now_step, horizon_steps, dt, params) for ob in obstacles]
