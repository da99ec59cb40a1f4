"""Route selection, reference path smoothing and the curvilinear frame.

The reference path is an approximating cubic B-spline fitted to the
concatenated center lines of the route. It is resampled to a dense
polyline for storage, but every evaluation at an arbitrary arc length goes
through the spline itself, so position, heading and curvature stay
mutually consistent.

Kinematic transform
-------------------
With the path frame at arc length ``s`` (tangent ``T``, normal ``N``,
curvature ``k``, curvature derivative ``k'``) and ``g = 1 - k d``, the
Cartesian velocity is ``V = s_dot g T + d_dot N``. The frame turns at rate
``w = k s_dot``, so the Cartesian acceleration is::

    A = (dvt - d_dot w) T + (d_ddot + vt w) N
    vt  = s_dot g
    dvt = s_ddot g - s_dot (k' s_dot d + k d_dot)

Heading, speed, tangential acceleration and curvature follow from ``V``
and ``A``; the inverse solves the same relations for the Frenet
derivatives.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import splev, splprep
from shapely.geometry import Point, Polygon

from .scenario import CartesianState, Scenario

__all__ = [
    "FrenetState",
    "ReferencePath",
    "RouteError",
    "DegenerateRouteError",
    "ProjectionError",
    "SingularityError",
    "plan_route",
    "route_cost",
    "route_graph",
    "build_reference_path",
    "reference_path_from_points",
    "cartesian_to_frenet",
    "frenet_to_cartesian",
    "frenet_to_cartesian_arrays",
]


class RouteError(RuntimeError):
    """No lanelet sequence connects the start to the goal."""


class DegenerateRouteError(ValueError):
    pass


class ProjectionError(ValueError):
    """The nearest point on the path is one of its endpoints."""


class SingularityError(ValueError):
    """The point lies outside the tube where the curvilinear frame is bijective."""


@dataclass(frozen=True)
class FrenetState:
    s: float
    s_dot: float = 0.0
    s_ddot: float = 0.0
    d: float = 0.0
    d_dot: float = 0.0
    d_ddot: float = 0.0


# -- routing -----------------------------------------------------------------------------


def route_graph(scenario: Scenario, lane_change_penalty: float = 5.0) -> Dict[int, List[Tuple[int, float]]]:
    """Directed lanelet graph: ``{id: [(neighbor, weight), ...]}``.

    Successor edges cost the current lanelet's center-line length, lane
    changes cost that length plus ``lane_change_penalty``.
    """
    graph: Dict[int, List[Tuple[int, float]]] = {}
    for la in scenario.lanelets:
        length = la.length
        edges = [(succ, length) for succ in la.successor_ids]
        for adj in (la.adjacent_left_id, la.adjacent_right_id):
            if adj is not None:
                edges.append((adj, length + lane_change_penalty))
        graph[la.id] = edges
    return graph


def route_cost(scenario: Scenario, route: Sequence[int], lane_change_penalty: float = 5.0) -> float:
    """Summed edge weights along ``route`` plus the final lanelet's length."""
    graph = route_graph(scenario, lane_change_penalty)
    total = 0.0
    for a, b in zip(route, route[1:]):
        weights = [w for n, w in graph[a] if n == b]
        if not weights:
            raise RouteError(f"lanelets {a} and {b} are not connected")
        total += min(weights)
    return total + scenario.lanelet(route[-1]).length


def _lanelet_polygon(lanelet) -> Polygon:
    return Polygon(np.vstack([lanelet.left_boundary, lanelet.right_boundary[::-1]]))


def start_lanelets(scenario: Scenario) -> List[int]:
    p = Point(scenario.problem.initial_state.x, scenario.problem.initial_state.y)
    return sorted(la.id for la in scenario.lanelets if _lanelet_polygon(la).covers(p))


def goal_lanelets(scenario: Scenario) -> List[int]:
    goal = Polygon(scenario.problem.goal_region)
    return sorted(la.id for la in scenario.lanelets if _lanelet_polygon(la).intersects(goal))


def plan_route(scenario: Scenario, lane_change_penalty: float = 5.0) -> List[int]:
    """Shortest lanelet sequence from the start lanelet to a goal lanelet.

    Dijkstra over :func:`route_graph`. The heap is keyed on ``(cost,
    path)``, so equal-cost routes resolve to the lexicographically smaller
    id sequence.
    """
    starts = start_lanelets(scenario)
    goals = set(goal_lanelets(scenario))
    if not starts:
        raise RouteError("initial position is not inside any lanelet")
    if not goals:
        raise RouteError("goal region does not intersect any lanelet")
    graph = route_graph(scenario, lane_change_penalty)
    lengths = {la.id: la.length for la in scenario.lanelets}

    heap: List[Tuple[float, Tuple[int, ...]]] = [(0.0, (s,)) for s in starts]
    heapq.heapify(heap)
    best: Optional[Tuple[float, Tuple[int, ...]]] = None
    settled = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if best is not None and cost > best[0]:
            break
        if node in goals:
            candidate = (cost + lengths[node], path)
            if best is None or candidate < best:
                best = candidate
        if node in settled:
            continue
        settled.add(node)
        for nxt, w in graph[node]:
            if nxt not in settled and nxt not in path:
                heapq.heappush(heap, (cost + w, path + (nxt,)))
    if best is None:
        raise RouteError(f"goal lanelets {sorted(goals)} are unreachable from {starts}")
    return list(best[1])


# -- reference path ----------------------------------------------------------------------


def _dedupe(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    keep = [0]
    for i in range(1, len(points)):
        if np.hypot(*(points[i] - points[keep[-1]])) > tol:
            keep.append(i)
    return points[keep]


def route_polyline(scenario: Scenario, route: Sequence[int]) -> np.ndarray:
    """Concatenate route center lines.

    A lane change ``a -> b`` keeps the first half of ``a`` and continues
    with the second half of ``b``; the spline fit smooths the jump.
    """
    pieces: List[np.ndarray] = []
    lanes = [scenario.lanelet(i) for i in route]
    for k, la in enumerate(lanes):
        c = la.center_line
        lo, hi = 0, len(c)
        if k > 0 and lanes[k - 1].id not in _predecessors(scenario, la.id):
            lo = len(c) // 2
        if k + 1 < len(lanes) and lanes[k + 1].id not in la.successor_ids:
            hi = max(1, (len(c) + 1) // 2)
        pieces.append(c[lo:hi])
    return _dedupe(np.vstack(pieces))


def _predecessors(scenario: Scenario, lanelet_id: int) -> List[int]:
    return [la.id for la in scenario.lanelets if lanelet_id in la.successor_ids]


class ReferencePath:
    """Smoothed reference curve with arc length, heading and curvature tables.

    Attributes ``points``, ``s``, ``theta``, ``kappa`` and ``dkappa`` hold
    the dense discretization; :meth:`evaluate` returns the same quantities
    at arbitrary arc lengths.
    """

    def __init__(self, tck, u: np.ndarray, points: np.ndarray, s: np.ndarray):
        self._tck = tck
        self.u = u
        self.points = points
        self.s = s
        self.theta, self.kappa, self.dkappa = self._geometry(u)[2:]

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def _geometry(self, u: np.ndarray):
        x, y = splev(u, self._tck)
        dx, dy = splev(u, self._tck, der=1)
        ddx, ddy = splev(u, self._tck, der=2)
        dddx, dddy = splev(u, self._tck, der=3)
        speed2 = dx * dx + dy * dy
        speed = np.sqrt(speed2)
        cross = dx * ddy - dy * ddx
        kappa = cross / (speed2 * speed)
        dcross = dx * dddy - dy * dddx
        dot = dx * ddx + dy * ddy
        dkappa = (dcross * speed2 - 3.0 * cross * dot) / (speed2 * speed2 * speed) / speed
        theta = np.arctan2(dy, dx)
        return np.asarray(x), np.asarray(y), theta, kappa, dkappa

    def u_of_s(self, s):
        return np.interp(s, self.s, self.u)

    def evaluate(self, s):
        """``(x, y, theta, kappa, dkappa)`` at arc length(s) ``s``."""
        u = self.u_of_s(np.asarray(s, dtype=float))
        return self._geometry(u)

    def _point_and_tangent(self, u: float):
        x, y = splev(u, self._tck)
        dx, dy = splev(u, self._tck, der=1)
        ddx, ddy = splev(u, self._tck, der=2)
        return np.array([x, y], dtype=float), np.array([dx, dy], dtype=float), np.array([ddx, ddy], dtype=float)

    def s_of_u(self, u: float) -> float:
        return float(np.interp(u, self.u, self.s))

    def project(self, x: float, y: float) -> Tuple[float, float]:
        """Nearest-point projection, returning the spline parameter and arc length.

        Coarse nearest-segment search over the dense polyline (smaller ``s``
        wins ties), then Newton iterations on the spline parameter.
        Raises :class:`ProjectionError` when the nearest point is an endpoint.
        """
        p = np.array([x, y], dtype=float)
        a = self.points[:-1]
        b = self.points[1:]
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        foot = a + t[:, None] * ab
        dist2 = np.einsum("ij,ij->i", p - foot, p - foot)
        i = int(np.argmin(dist2))
        u = self.u[i] + t[i] * (self.u[i + 1] - self.u[i])
        u_lo, u_hi = self.u[0], self.u[-1]
        for _ in range(30):
            c, dc, ddc = self._point_and_tangent(u)
            r = c - p
            f = float(r @ dc)
            fp = float(dc @ dc + r @ ddc)
            if fp <= 0.0:
                break
            step = f / fp
            u = min(max(u - step, u_lo), u_hi)
            if abs(step) < 1e-15:
                break
        if u <= u_lo or u >= u_hi:
            raise ProjectionError("projection falls on a path endpoint")
        return u, self.s_of_u(u)

    def to_csv(self, path) -> None:
        """Dump ``s, x, y, theta, kappa`` rows for plotting."""
        data = np.column_stack([self.s, self.points, self.theta, self.kappa])
        np.savetxt(path, data, delimiter=",", header="s,x,y,theta,kappa", comments="")


def reference_path_from_points(points: np.ndarray, smoothing: float = 1e-4, spacing: float = 0.5) -> ReferencePath:
    """Fit an approximating cubic spline through ``points`` and resample it.

    ``smoothing`` is the per-point squared residual budget [m^2]; FITPACK
    receives ``smoothing * len(points)``. Set it near the squared noise
    level of the center-line data: the default (1 cm rms) suits clean map
    geometry, noisy polylines need proportionally more.
    """
    pts = _dedupe(np.asarray(points, dtype=float))
    if len(pts) < 4:
        raise DegenerateRouteError(f"route center line has {len(pts)} distinct points, need at least 4")
    chord = np.concatenate(([0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))))
    tck, _ = splprep([pts[:, 0], pts[:, 1]], u=chord, s=smoothing * len(pts), k=3)

    # arc length as a function of the spline parameter, on a fine grid
    fine = np.linspace(chord[0], chord[-1], max(2000, int(20 * chord[-1] / spacing)))
    fx, fy = splev(fine, tck)
    arc = np.concatenate(([0.0], np.cumsum(np.hypot(np.diff(fx), np.diff(fy)))))
    n = int(math.ceil(arc[-1] / spacing)) + 1
    u = np.interp(np.linspace(0.0, arc[-1], n), arc, fine)
    x, y = splev(u, tck)
    out = np.column_stack([x, y])
    s = np.concatenate(([0.0], np.cumsum(np.hypot(*np.diff(out, axis=0).T))))
    return ReferencePath(tck, u, out, s)


def build_reference_path(
    scenario: Scenario, route: Sequence[int], smoothing: float = 1e-4, spacing: float = 0.5
) -> ReferencePath:
    return reference_path_from_points(route_polyline(scenario, route), smoothing=smoothing, spacing=spacing)


# -- curvilinear transforms ----------------------------------------------------------------


def _wrap(angle):
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def cartesian_to_frenet(path: ReferencePath, state: CartesianState) -> FrenetState:
    """Decompose a Cartesian state into path-relative coordinates.

    ``d`` is positive to the left of the path.
    """
    u, s = path.project(state.x, state.y)
    c, dc, _ = path._point_and_tangent(u)
    _, _, theta, k, dk = path._geometry(np.array([u]))
    theta, k, dk = float(theta[0]), float(k[0]), float(dk[0])
    tx, ty = math.cos(theta), math.sin(theta)
    d = (state.x - c[0]) * -ty + (state.y - c[1]) * tx
    g = 1.0 - k * d
    if g <= 0.0:
        raise SingularityError(f"|d * kappa| = {abs(k * d):.3f} >= 1 at s = {s:.2f}")

    cp, sp = math.cos(state.psi), math.sin(state.psi)
    vx, vy = state.v * cp, state.v * sp
    ax = state.a * cp - state.v * state.v * state.kappa * sp
    ay = state.a * sp + state.v * state.v * state.kappa * cp
    vt = vx * tx + vy * ty
    vn = -vx * ty + vy * tx
    at = ax * tx + ay * ty
    an = -ax * ty + ay * tx

    s_dot = vt / g
    d_dot = vn
    w = k * s_dot
    dvt = at + vn * w
    d_ddot = an - vt * w
    s_ddot = (dvt + s_dot * (dk * s_dot * d + k * d_dot)) / g
    return FrenetState(
        s=float(s), s_dot=float(s_dot), s_ddot=float(s_ddot), d=float(d), d_dot=float(d_dot), d_ddot=float(d_ddot)
    )


def frenet_to_cartesian_arrays(path: ReferencePath, s, s_dot, s_ddot, d, d_dot, d_ddot, psi_hold=None):
    """Vectorized inverse transform.

    Returns ``(x, y, psi, v, a, kappa, valid)`` arrays of the broadcast
    input shape. ``valid`` is False where ``s`` leaves the path or
    ``|d kappa_r| >= 1``. Where the speed vanishes the heading falls back
    to ``psi_hold`` (if given, same shape) or the path heading.
    """
    s = np.asarray(s, dtype=float)
    rx, ry, theta, k, dk = path.evaluate(s)
    g = 1.0 - k * d
    valid = (s >= path.s[0]) & (s <= path.s[-1]) & (g > 0.0)

    tx, ty = np.cos(theta), np.sin(theta)
    x = rx - d * ty
    y = ry + d * tx

    vt = s_dot * g
    vn = d_dot
    w = k * s_dot
    dvt = s_ddot * g - s_dot * (dk * s_dot * d + k * d_dot)
    at = dvt - vn * w
    an = d_ddot + vt * w

    v2 = vt * vt + vn * vn
    v = np.sqrt(v2)
    moving = v > 1e-9
    safe_v = np.where(moving, v, 1.0)
    a = np.where(moving, (at * vt + an * vn) / safe_v, at)
    kappa = np.where(moving, (vt * an - vn * at) / (safe_v * safe_v * safe_v), 0.0)
    rel = np.arctan2(vn, vt)
    if psi_hold is None:
        psi = np.where(moving, theta + rel, theta)
    else:
        psi = np.where(moving, theta + rel, psi_hold)
    return x, y, _wrap(psi), v, a, kappa, valid


def frenet_to_cartesian(path: ReferencePath, fstate: FrenetState) -> CartesianState:
    f = fstate
    if not (path.s[0] <= f.s <= path.s[-1]):
        raise SingularityError(f"s = {f.s:.3f} outside the path range [0, {path.length:.3f}]")
    x, y, psi, v, a, kappa, valid = frenet_to_cartesian_arrays(
        path,
        np.array([f.s]),
        np.array([f.s_dot]),
        np.array([f.s_ddot]),
        np.array([f.d]),
        np.array([f.d_dot]),
        np.array([f.d_ddot]),
    )
    if not valid[0]:
        raise SingularityError(f"|d * kappa| >= 1 at s = {f.s:.2f}")
    return CartesianState(
        x=float(x[0]), y=float(y[0]), psi=float(psi[0]), v=float(v[0]), a=float(a[0]), kappa=float(kappa[0])
    )
