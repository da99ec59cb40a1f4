"""Continuous collision checking with swept oriented bounding boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.ops import unary_union

from .scenario import CartesianState, Obstacle, Scenario, obstacle_state_at, resample_polyline

__all__ = [
    "OBB",
    "RoadBoundary",
    "obb_intersects",
    "obbs_intersect",
    "footprint_obb",
    "sweep_obb",
    "sweep_arrays",
    "obb_corners",
    "obstacle_sweeps",
    "collision_free_rows",
    "check_collision",
    "check_on_road",
    "on_road_rows",
    "road_boundary",
]


@dataclass(frozen=True)
class OBB:
    center: tuple
    half_extents: tuple
    orientation: float

    def __post_init__(self):
        if not (self.half_extents[0] > 0 and self.half_extents[1] > 0):
            raise ValueError("half extents must be positive")

    def corners(self) -> np.ndarray:
        return obb_corners(
            np.array(self.center, dtype=float), self.half_extents[0], self.half_extents[1], self.orientation
        )


def obb_corners(center, hl, hw, angle) -> np.ndarray:
    """Corner coordinates ``(..., 4, 2)``, counter-clockwise from front-left."""
    center = np.asarray(center, dtype=float)
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle)[..., None], np.sin(angle)[..., None]
    lx = np.array([1.0, -1.0, -1.0, 1.0]) * np.asarray(hl, dtype=float)[..., None]
    ly = np.array([1.0, 1.0, -1.0, -1.0]) * np.asarray(hw, dtype=float)[..., None]
    x = center[..., 0:1] + c * lx - s * ly
    y = center[..., 1:2] + s * lx + c * ly
    return np.stack([x, y], axis=-1)


def obbs_intersect(ca, ha, aa, cb, hb, ab) -> np.ndarray:
    """Vectorized separating-axis test for boxes given as arrays.

    ``c*`` are centers ``(..., 2)``, ``h*`` half extents ``(..., 2)`` and
    ``a*`` orientations ``(...)``; all broadcast. Closed sets: touching
    boxes intersect.
    """
    ua = np.stack([np.cos(aa), np.sin(aa)], axis=-1)
    va = np.stack([-np.sin(aa), np.cos(aa)], axis=-1)
    ub = np.stack([np.cos(ab), np.sin(ab)], axis=-1)
    vb = np.stack([-np.sin(ab), np.cos(ab)], axis=-1)
    delta = np.asarray(cb, dtype=float) - np.asarray(ca, dtype=float)
    ha = np.asarray(ha, dtype=float)
    hb = np.asarray(hb, dtype=float)
    hit = True
    for axis in (ua, va, ub, vb):
        ra = ha[..., 0] * np.abs(np.sum(ua * axis, -1)) + ha[..., 1] * np.abs(np.sum(va * axis, -1))
        rb = hb[..., 0] * np.abs(np.sum(ub * axis, -1)) + hb[..., 1] * np.abs(np.sum(vb * axis, -1))
        hit = hit & (np.abs(np.sum(delta * axis, -1)) <= ra + rb)
    return hit


def obb_intersects(a: OBB, b: OBB) -> bool:
    return bool(
        obbs_intersect(
            np.array(a.center, dtype=float),
            np.array(a.half_extents, dtype=float),
            a.orientation,
            np.array(b.center, dtype=float),
            np.array(b.half_extents, dtype=float),
            b.orientation,
        )
    )


def _wrap(angle):
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def sweep_arrays(x1, y1, psi1, x2, y2, psi2, hl, hw):
    """Swept box covering two footprint placements; returns ``(center, half, angle)``.

    The box is aligned with the mean heading and spans both footprints'
    projections on its axes. When the heading changes by ``delta`` the
    extents grow by the sagitta bound ``r delta^2 / 8`` (``r`` the corner
    radius), which covers the footprint at every intermediate pose of a
    linear pose interpolation.
    """
    dpsi = _wrap(np.asarray(psi2, dtype=float) - psi1)
    phi = psi1 + 0.5 * dpsi
    ux, uy = np.cos(phi), np.sin(phi)
    lo_u = hi_u = lo_n = hi_n = None
    for x, y, psi in ((x1, y1, psi1), (x2, y2, psi2)):
        rel = psi - phi
        cr, sr = np.abs(np.cos(rel)), np.abs(np.sin(rel))
        pu = x * ux + y * uy
        pn = -x * uy + y * ux
        eu = hl * cr + hw * sr
        en = hl * sr + hw * cr
        if lo_u is None:
            lo_u, hi_u, lo_n, hi_n = pu - eu, pu + eu, pn - en, pn + en
        else:
            lo_u, hi_u = np.minimum(lo_u, pu - eu), np.maximum(hi_u, pu + eu)
            lo_n, hi_n = np.minimum(lo_n, pn - en), np.maximum(hi_n, pn + en)
    pad = math.hypot(hl, hw) * dpsi * dpsi / 8.0
    cu, cn = 0.5 * (lo_u + hi_u), 0.5 * (lo_n + hi_n)
    center = np.stack([cu * ux - cn * uy, cu * uy + cn * ux], axis=-1)
    half = np.stack([0.5 * (hi_u - lo_u) + pad, 0.5 * (hi_n - lo_n) + pad], axis=-1)
    return center, half, phi


def footprint_obb(state: CartesianState, length: float, width: float) -> OBB:
    return OBB((state.x, state.y), (0.5 * length, 0.5 * width), state.psi)


def sweep_obb(state1: CartesianState, state2: CartesianState, vehicle) -> OBB:
    """One box enclosing the footprint at both states (and between them)."""
    center, half, phi = sweep_arrays(
        state1.x, state1.y, state1.psi, state2.x, state2.y, state2.psi, 0.5 * vehicle.length, 0.5 * vehicle.width
    )
    return OBB((float(center[0]), float(center[1])), (float(half[0]), float(half[1])), float(phi))


@dataclass(frozen=True, eq=False)
class ObstacleSweeps:
    """Per-interval swept boxes of all obstacles, shape ``(n_obs, K, ...)``."""

    center: np.ndarray
    half: np.ndarray
    angle: np.ndarray


def obstacle_sweeps(obstacles: Sequence[Obstacle], start_step: int, steps: int, dt: float) -> ObstacleSweeps:
    """Swept boxes over ``[start_step + k, start_step + k + 1]`` for ``k < steps``.

    Uses the recorded (ground-truth) obstacle motion, extrapolated past the
    end of the record. Static obstacles get their fixed footprint.
    """
    n = len(obstacles)
    center = np.zeros((n, steps, 2))
    half = np.zeros((n, steps, 2))
    angle = np.zeros((n, steps))
    for i, ob in enumerate(obstacles):
        states = [obstacle_state_at(ob, start_step + k, dt) for k in range(steps + 1)]
        xs = np.array([s.x for s in states])
        ys = np.array([s.y for s in states])
        ps = np.array([s.psi for s in states])
        c, h, a = sweep_arrays(xs[:-1], ys[:-1], ps[:-1], xs[1:], ys[1:], ps[1:], 0.5 * ob.length, 0.5 * ob.width)
        center[i], half[i], angle[i] = c, h, a
    return ObstacleSweeps(center, half, angle)


def collision_free_rows(x, y, psi, vehicle, sweeps: ObstacleSweeps) -> np.ndarray:
    """Collision-free flag per row of ``(N, K+1)`` ego state arrays."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    psi = np.atleast_2d(psi)
    if sweeps.center.shape[0] == 0:
        return np.ones(x.shape[0], dtype=bool)
    steps = min(x.shape[1] - 1, sweeps.center.shape[1])
    c, h, a = sweep_arrays(
        x[:, :steps], y[:, :steps], psi[:, :steps],
        x[:, 1 : steps + 1], y[:, 1 : steps + 1], psi[:, 1 : steps + 1],
        0.5 * vehicle.length, 0.5 * vehicle.width,
    )
    hit = obbs_intersect(
        c[:, None], h[:, None], a[:, None],
        sweeps.center[None, :, :steps], sweeps.half[None, :, :steps], sweeps.angle[None, :, :steps],
    )
    return ~np.any(hit, axis=(1, 2))


def check_collision(sample, scenario: Scenario, vehicle, start_step: int = 0) -> bool:
    """True iff the sample's swept footprint never meets an obstacle's swept footprint."""
    steps = sample.x.shape[-1] - 1
    sweeps = obstacle_sweeps(scenario.obstacles, start_step, steps, scenario.dt)
    return bool(collision_free_rows(sample.x, sample.y, sample.psi, vehicle, sweeps)[0])


class RoadBoundary:
    """Drivable area as the union of per-segment lanelet quads."""

    def __init__(self, polygons: Iterable[Polygon]):
        self.polygons: List[Polygon] = list(polygons)
        self.area = unary_union(self.polygons)
        shapely.prepare(self.area)

    def contains_points(self, xy: np.ndarray) -> np.ndarray:
        """Closed-set containment (points on the boundary count as inside)."""
        xy = np.asarray(xy, dtype=float)
        pts = shapely.points(xy.reshape(-1, 2))
        return shapely.covers(self.area, pts).reshape(xy.shape[:-1])


def road_boundary(scenario: Scenario) -> RoadBoundary:
    quads = []
    for la in scenario.lanelets:
        n = max(len(la.left_boundary), len(la.right_boundary))
        left = resample_polyline(la.left_boundary, n)
        right = resample_polyline(la.right_boundary, n)
        for i in range(n - 1):
            quads.append(Polygon([left[i], left[i + 1], right[i + 1], right[i]]))
    return RoadBoundary(quads)


def on_road_rows(x, y, psi, vehicle, boundary: RoadBoundary) -> np.ndarray:
    corners = obb_corners(
        np.stack([np.atleast_2d(x), np.atleast_2d(y)], axis=-1), 0.5 * vehicle.length, 0.5 * vehicle.width, np.atleast_2d(psi)
    )
    inside = boundary.contains_points(corners)
    return np.all(inside, axis=(1, 2))


def check_on_road(sample, boundary: RoadBoundary, vehicle) -> bool:
    """True iff all four footprint corners stay in the drivable area at every step."""
    return bool(on_road_rows(sample.x, sample.y, sample.psi, vehicle, boundary)[0])
