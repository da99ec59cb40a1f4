"""Kinematic single-track feasibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VehicleParams",
    "CONSTRAINTS",
    "permissible_acceleration",
    "feasibility_flags",
    "check_feasibility",
]

CONSTRAINTS = ("acceleration", "curvature", "curvature_rate", "yaw_rate")


@dataclass(frozen=True)
class VehicleParams:
    length: float
    width: float
    wheelbase: float
    delta_max: float
    a_max: float
    v_switch: float
    kappa_dot_max: float

    def __post_init__(self):
        for name in ("length", "width", "wheelbase", "delta_max", "a_max", "v_switch", "kappa_dot_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"vehicle parameter {name} must be positive")
        if not self.delta_max < math.pi / 2:
            raise ValueError("delta_max must be below pi/2")

    @property
    def kappa_max(self) -> float:
        return math.tan(self.delta_max) / self.wheelbase


def permissible_acceleration(v, params: VehicleParams):
    """Upper acceleration bound: ``a_max`` up to ``v_switch``, then ``a_max * v_switch / v``."""
    v = np.asarray(v, dtype=float)
    safe = np.where(v > params.v_switch, v, 1.0)
    out = np.where(v > params.v_switch, params.a_max * (params.v_switch / safe), params.a_max)
    return float(out) if out.ndim == 0 else out


def _wrap(angle):
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def feasibility_flags(v, a, kappa, psi, dt: float, params: VehicleParams) -> np.ndarray:
    """Per-sample constraint flags for ``(N, K+1)`` state arrays.

    Returns an ``(N, 4)`` boolean array ordered like :data:`CONSTRAINTS`.
    Curvature rate and yaw rate use forward differences over ``dt``; the
    yaw-rate bound ``kappa_max * v`` uses the speed at the left end of
    each difference.
    """
    kappa_max = params.kappa_max
    a_perm = permissible_acceleration(v, params)
    acc_ok = np.all((a >= -params.a_max) & (a <= a_perm), axis=-1)
    curv_ok = np.all(np.abs(kappa) <= kappa_max, axis=-1)
    kdot = np.diff(kappa, axis=-1) / dt
    kdot_ok = np.all(np.abs(kdot) <= params.kappa_dot_max, axis=-1)
    yaw_rate = _wrap(np.diff(psi, axis=-1)) / dt
    yaw_ok = np.all(np.abs(yaw_rate) <= kappa_max * v[..., :-1], axis=-1)
    return np.stack([acc_ok, curv_ok, kdot_ok, yaw_ok], axis=-1)


def check_feasibility(sample, params: VehicleParams) -> dict:
    """Evaluate the four kinematic constraints for one sample and store them on it."""
    flags = feasibility_flags(sample.v, sample.a, sample.kappa, sample.psi, sample.dt, params)
    sample.feasibility = flags
    return dict(zip(CONSTRAINTS, (bool(f) for f in flags)))
