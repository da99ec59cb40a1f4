"""Candidate trajectory generation over the sampling matrix.

Samples are stored column-wise in a :class:`TrajectoryBundle` (one row per
candidate, one column per time step). :class:`TrajectorySample` is a
light view onto one row. Rows are ordered by the ``(tau, d_end, v_end)``
index triple with the last index varying fastest.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .feasibility import CONSTRAINTS, VehicleParams, permissible_acceleration
from .polynomial import QuarticPoly, QuinticPoly, evaluate, solve_quartic, solve_quintic
from .refpath import FrenetState, ReferencePath, frenet_to_cartesian_arrays
from .scenario import CartesianState

__all__ = [
    "SamplingConfig",
    "TrajectoryBundle",
    "TrajectorySample",
    "DEFAULT_LEVELS",
    "default_config_for",
    "generate_bundle",
    "generate_samples",
    "include_point",
]

VELOCITY_SAMPLING = "velocity_sampling"
S_SAMPLING = "s_sampling"

# (|t|, |d|, |v|) per density level; products give 50/180/800/3500/13000/90000
DEFAULT_LEVELS = {1: (2, 5, 5), 2: (3, 6, 10), 3: (5, 10, 16), 4: (7, 20, 25), 5: (10, 26, 50), 6: (15, 60, 100)}


@dataclass(frozen=True)
class SamplingConfig:
    t_values: Tuple[float, ...]
    d_values: Tuple[float, ...]
    T: float
    dt: float
    v_values: Optional[Tuple[float, ...]] = None
    s_values: Optional[Tuple[float, ...]] = None
    mode: str = VELOCITY_SAMPLING
    s_end_velocity: float = 0.0

    def __post_init__(self):
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError("planning horizon T must be a positive multiple of dt")
        if not self.t_values or any(not (0.0 < t <= self.T + 1e-12) for t in self.t_values):
            raise ValueError("every sampled duration must lie in (0, T]")
        if not self.d_values:
            raise ValueError("d_values must not be empty")
        if self.mode == VELOCITY_SAMPLING:
            if not self.v_values or self.s_values is not None:
                raise ValueError("velocity sampling needs v_values and no s_values")
        elif self.mode == S_SAMPLING:
            if not self.s_values or self.v_values is not None:
                raise ValueError("s sampling needs s_values and no v_values")
        else:
            raise ValueError(f"unknown sampling mode {self.mode!r}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def lon_values(self) -> Tuple[float, ...]:
        return self.v_values if self.mode == VELOCITY_SAMPLING else self.s_values

    @property
    def count(self) -> int:
        return len(self.t_values) * len(self.d_values) * len(self.lon_values)


def include_point(grid: np.ndarray, value: float) -> np.ndarray:
    """Return ``grid`` with ``value`` substituted for its nearest interior point.

    Endpoints are kept; grids with fewer than three points get ``value``
    appended instead. The result is sorted.
    """
    grid = np.array(grid, dtype=float)
    if np.any(grid == value):
        return grid
    if len(grid) < 3:
        return np.sort(np.append(grid, value))
    interior = np.arange(1, len(grid) - 1)
    i = interior[np.argmin(np.abs(grid[interior] - value))]
    grid[i] = value
    return np.sort(grid)


def default_config_for(
    state: FrenetState,
    vehicle: VehicleParams,
    T: float,
    dt: float,
    density: int,
    levels: Dict[int, Tuple[int, int, int]] = None,
    t_min: float = 1.0,
    d_range: Tuple[float, float] = (-3.5, 3.5),
) -> SamplingConfig:
    """Velocity-sampling grid around ``state`` at a density level.

    End velocities span ``[max(0, v - a_max T), v + a_permissible(v) T]``;
    both the lateral and the velocity grid contain the current value.
    """
    n_t, n_d, n_v = (levels or DEFAULT_LEVELS)[int(density)]
    v = max(state.s_dot, 0.0)
    v_lo = max(0.0, v - vehicle.a_max * T)
    v_hi = v + permissible_acceleration(v, vehicle) * T
    v_values = include_point(np.linspace(v_lo, v_hi, n_v), v)
    d_values = include_point(np.linspace(d_range[0], d_range[1], n_d), state.d)
    t_values = np.linspace(min(t_min, T), T, n_t) if n_t > 1 else np.array([T])
    return SamplingConfig(
        t_values=tuple(float(x) for x in t_values),
        d_values=tuple(float(x) for x in d_values),
        v_values=tuple(float(x) for x in v_values),
        T=T,
        dt=dt,
    )


_FRENET_FIELDS = ("s", "s_dot", "s_ddot", "s_dddot", "d", "d_dot", "d_ddot", "d_dddot")
_CART_FIELDS = ("x", "y", "psi", "v", "a", "kappa")


@dataclass(eq=False)
class TrajectoryBundle:
    """Column-wise storage of ``n`` candidates over ``K + 1`` time steps."""

    dt: float
    T: float
    tau: np.ndarray
    d_end: np.ndarray
    lon_end: np.ndarray
    index: np.ndarray  # (n, 3) sampling-matrix indices
    lat_coeffs: np.ndarray
    lon_coeffs: np.ndarray
    s: np.ndarray
    s_dot: np.ndarray
    s_ddot: np.ndarray
    s_dddot: np.ndarray
    d: np.ndarray
    d_dot: np.ndarray
    d_ddot: np.ndarray
    d_dddot: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    v: np.ndarray
    a: np.ndarray
    kappa: np.ndarray
    feasibility: Optional[np.ndarray] = None
    costs: Optional[np.ndarray] = None
    total_cost: Optional[np.ndarray] = None
    collision_checked: Optional[np.ndarray] = None
    collision_free: Optional[np.ndarray] = None
    on_road: Optional[np.ndarray] = None
    dropped: int = 0

    def __post_init__(self):
        n = len(self.tau)
        if self.collision_checked is None:
            self.collision_checked = np.zeros(n, dtype=bool)
        if self.collision_free is None:
            self.collision_free = np.zeros(n, dtype=bool)
        if self.on_road is None:
            self.on_road = np.zeros(n, dtype=bool)

    def __len__(self):
        return len(self.tau)

    def __getitem__(self, i) -> "TrajectorySample":
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return TrajectorySample(self, i)

    def __iter__(self):
        return (TrajectorySample(self, i) for i in range(len(self)))

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.x.shape[1]) * self.dt

    @property
    def feasible(self) -> np.ndarray:
        if self.feasibility is None:
            raise RuntimeError("feasibility has not been checked")
        return np.all(self.feasibility, axis=1)

    def take(self, idx) -> "TrajectoryBundle":
        """Row subset as a new bundle (copies)."""
        idx = np.asarray(idx)
        kw = {}
        for f in self.__dataclass_fields__:
            val = getattr(self, f)
            if f in ("dt", "T"):
                kw[f] = val
            elif f == "dropped":
                kw[f] = 0
            elif val is None:
                kw[f] = None
            else:
                kw[f] = val[idx]
        return TrajectoryBundle(**kw)

    @staticmethod
    def concatenate(parts: Sequence["TrajectoryBundle"]) -> "TrajectoryBundle":
        first = parts[0]
        kw = {}
        for f in first.__dataclass_fields__:
            vals = [getattr(p, f) for p in parts]
            if f in ("dt", "T"):
                kw[f] = vals[0]
            elif f == "dropped":
                kw[f] = int(sum(vals))
            elif any(v is None for v in vals):
                kw[f] = None
            else:
                kw[f] = np.concatenate(vals, axis=0)
        return TrajectoryBundle(**kw)


class TrajectorySample:
    """View of one candidate trajectory inside a bundle."""

    __slots__ = ("bundle", "row")

    def __init__(self, bundle: TrajectoryBundle, row: int):
        self.bundle = bundle
        self.row = row

    def __repr__(self):
        return f"TrajectorySample(index={self.index}, tau={self.tau:.2f}, d_end={self.d_end:.2f}, lon_end={self.lon_end:.2f})"

    def __getattr__(self, name):
        if name in _FRENET_FIELDS or name in _CART_FIELDS:
            return getattr(self.bundle, name)[self.row]
        raise AttributeError(name)

    @property
    def dt(self) -> float:
        return self.bundle.dt

    @property
    def T(self) -> float:
        return self.bundle.T

    @property
    def t(self) -> np.ndarray:
        return self.bundle.t

    @property
    def tau(self) -> float:
        return float(self.bundle.tau[self.row])

    @property
    def d_end(self) -> float:
        return float(self.bundle.d_end[self.row])

    @property
    def lon_end(self) -> float:
        return float(self.bundle.lon_end[self.row])

    @property
    def v_end(self) -> float:
        return float(self.bundle.v[self.row, -1])

    @property
    def index(self) -> Tuple[int, int, int]:
        return tuple(int(i) for i in self.bundle.index[self.row])

    @property
    def lateral(self) -> QuinticPoly:
        return QuinticPoly(self.bundle.lat_coeffs[self.row])

    @property
    def longitudinal(self):
        c = self.bundle.lon_coeffs[self.row]
        return QuinticPoly(c) if len(c) == 6 else QuarticPoly(c)

    @property
    def states(self) -> List[CartesianState]:
        b, r = self.bundle, self.row
        return [
            CartesianState(
                x=float(b.x[r, k]),
                y=float(b.y[r, k]),
                psi=float(b.psi[r, k]),
                v=float(b.v[r, k]),
                a=float(b.a[r, k]),
                kappa=float(b.kappa[r, k]),
                step=k,
            )
            for k in range(b.x.shape[1])
        ]

    @property
    def frenet_states(self) -> List[FrenetState]:
        b, r = self.bundle, self.row
        return [
            FrenetState(
                s=float(b.s[r, k]),
                s_dot=float(b.s_dot[r, k]),
                s_ddot=float(b.s_ddot[r, k]),
                d=float(b.d[r, k]),
                d_dot=float(b.d_dot[r, k]),
                d_ddot=float(b.d_ddot[r, k]),
            )
            for k in range(b.x.shape[1])
        ]

    @property
    def feasibility(self) -> Optional[Dict[str, bool]]:
        f = self.bundle.feasibility
        if f is None:
            return None
        return dict(zip(CONSTRAINTS, (bool(x) for x in f[self.row])))

    @feasibility.setter
    def feasibility(self, flags):
        b = self.bundle
        if b.feasibility is None:
            b.feasibility = np.ones((len(b), len(CONSTRAINTS)), dtype=bool)
        if isinstance(flags, dict):
            flags = [flags[c] for c in CONSTRAINTS]
        b.feasibility[self.row] = np.asarray(flags, dtype=bool)

    @property
    def feasible(self) -> bool:
        f = self.feasibility
        return f is not None and all(f.values())

    @property
    def costs(self) -> Optional[Dict[str, float]]:
        from .cost import COST_NAMES

        c = self.bundle.costs
        if c is None or np.isnan(c[self.row]).all():
            return None
        return dict(zip(COST_NAMES, (float(x) for x in c[self.row])))

    @property
    def total_cost(self) -> Optional[float]:
        tc = self.bundle.total_cost
        if tc is None or np.isnan(tc[self.row]):
            return None
        return float(tc[self.row])

    @property
    def flags(self) -> Dict[str, bool]:
        b, r = self.bundle, self.row
        return {
            "collision_checked": bool(b.collision_checked[r]),
            "collision_free": bool(b.collision_free[r]),
            "on_road": bool(b.on_road[r]),
        }

    def state_at(self, k: int) -> CartesianState:
        b, r = self.bundle, self.row
        return CartesianState(
            x=float(b.x[r, k]),
            y=float(b.y[r, k]),
            psi=float(b.psi[r, k]),
            v=float(b.v[r, k]),
            a=float(b.a[r, k]),
            kappa=float(b.kappa[r, k]),
            step=k,
        )


def _lateral_profiles(current: FrenetState, t_values, d_values, t):
    """``(n_t, n_d, K+1)`` lateral position and derivatives, held after tau."""
    tau = np.asarray(t_values)[:, None]
    d_end = np.asarray(d_values)[None, :]
    poly = solve_quintic((current.d, current.d_dot, current.d_ddot), (d_end, 0.0, 0.0), tau)
    tt = np.minimum(t[None, None, :], tau[..., None])
    d, dd, ddd, dddd = evaluate(QuinticPoly(poly.coeffs[:, :, None, :]), tt)
    after = t[None, None, :] > tau[..., None]
    d = np.where(after, d_end[..., None], d)
    dd = np.where(after, 0.0, dd)
    ddd = np.where(after, 0.0, ddd)
    dddd = np.where(after, 0.0, dddd)
    return poly.coeffs, d, dd, ddd, dddd


def _longitudinal_profiles(current: FrenetState, config: SamplingConfig, t):
    """``(n_t, n_lon, K+1)`` longitudinal position and derivatives, constant speed after tau."""
    tau = np.asarray(config.t_values)[:, None]
    ends = np.asarray(config.lon_values)[None, :]
    start = (current.s, current.s_dot, current.s_ddot)
    if config.mode == VELOCITY_SAMPLING:
        poly = solve_quartic(start, (ends, 0.0), tau)
        coeffs = poly.coeffs
        poly_eval = QuarticPoly(coeffs[:, :, None, :])
    else:
        poly = solve_quintic(start, (ends, config.s_end_velocity, 0.0), tau)
        coeffs = poly.coeffs
        poly_eval = QuinticPoly(coeffs[:, :, None, :])
    tt = np.minimum(t[None, None, :], tau[..., None])
    s, sd, sdd, sddd = evaluate(poly_eval, tt)
    after = t[None, None, :] > tau[..., None]
    s_tau = s  # at t >= tau, tt == tau, so these hold the end values
    s = np.where(after, s_tau + sd * (t[None, None, :] - tau[..., None]), s)
    sdd = np.where(after, 0.0, sdd)
    sddd = np.where(after, 0.0, sddd)
    return coeffs, s, sd, sdd, sddd


def _forward_fill_heading(psi, moving, psi0):
    """Replace headings at standstill with the last moving heading (or ``psi0``)."""
    if np.all(moving):
        return psi
    n, m = psi.shape
    idx = np.where(moving, np.arange(m)[None, :], -1)
    idx = np.maximum.accumulate(idx, axis=1)
    filled = np.where(idx >= 0, np.take_along_axis(psi, np.maximum(idx, 0), axis=1), psi0)
    return filled


def _transform_rows(path: ReferencePath, fr: Dict[str, np.ndarray], psi0: float):
    x, y, psi, v, a, kappa, valid = frenet_to_cartesian_arrays(
        path, fr["s"], fr["s_dot"], fr["s_ddot"], fr["d"], fr["d_dot"], fr["d_ddot"]
    )
    psi = _forward_fill_heading(psi, v > 1e-9, psi0)
    return x, y, psi, v, a, kappa, np.all(valid, axis=1)


def generate_bundle(
    current: FrenetState,
    config: SamplingConfig,
    path: ReferencePath,
    initial: Optional[CartesianState] = None,
    workers: int = 1,
) -> TrajectoryBundle:
    """Build the full ``|t| x |d| x |v|`` candidate set.

    Every row is extended to the horizon ``T`` and transformed to Cartesian
    coordinates. Rows that leave the path range or the curvilinear tube are
    dropped and counted in ``bundle.dropped``. If ``initial`` is given it is
    written verbatim into time step 0. ``workers > 1`` splits the Cartesian
    transform into contiguous row chunks evaluated on a thread pool; the
    result is identical to the serial path.
    """
    K = config.steps
    t = np.arange(K + 1) * config.dt
    n_t, n_d, n_l = len(config.t_values), len(config.d_values), len(config.lon_values)

    lat_c, d, dd, ddd, dddd = _lateral_profiles(current, config.t_values, config.d_values, t)
    lon_c, s, sd, sdd, sddd = _longitudinal_profiles(current, config, t)

    shape = (n_t, n_d, n_l, K + 1)
    fr = {
        "d": np.broadcast_to(d[:, :, None, :], shape).reshape(-1, K + 1),
        "d_dot": np.broadcast_to(dd[:, :, None, :], shape).reshape(-1, K + 1),
        "d_ddot": np.broadcast_to(ddd[:, :, None, :], shape).reshape(-1, K + 1),
        "d_dddot": np.broadcast_to(dddd[:, :, None, :], shape).reshape(-1, K + 1),
        "s": np.broadcast_to(s[:, None, :, :], shape).reshape(-1, K + 1),
        "s_dot": np.broadcast_to(sd[:, None, :, :], shape).reshape(-1, K + 1),
        "s_ddot": np.broadcast_to(sdd[:, None, :, :], shape).reshape(-1, K + 1),
        "s_dddot": np.broadcast_to(sddd[:, None, :, :], shape).reshape(-1, K + 1),
    }
    it, id_, il = np.meshgrid(np.arange(n_t), np.arange(n_d), np.arange(n_l), indexing="ij")
    index = np.column_stack([it.ravel(), id_.ravel(), il.ravel()])
    tau = np.asarray(config.t_values)[index[:, 0]]
    d_end = np.asarray(config.d_values)[index[:, 1]]
    lon_end = np.asarray(config.lon_values)[index[:, 2]]
    lat_rows = lat_c[index[:, 0], index[:, 1]]
    lon_rows = lon_c[index[:, 0], index[:, 2]]

    psi0 = initial.psi if initial is not None else float(path.evaluate(current.s)[2])
    n = len(index)
    if workers > 1 and n > 1:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        chunks = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(lambda c: _transform_rows(path, {k: v[c[0]:c[1]] for k, v in fr.items()}, psi0), chunks))
        x, y, psi, v, a, kappa, ok = (np.concatenate([p[i] for p in parts]) for i in range(7))
    else:
        x, y, psi, v, a, kappa, ok = _transform_rows(path, fr, psi0)

    if initial is not None:
        x[:, 0], y[:, 0], psi[:, 0] = initial.x, initial.y, initial.psi
        v[:, 0], a[:, 0], kappa[:, 0] = initial.v, initial.a, initial.kappa

    keep = np.flatnonzero(ok)
    return TrajectoryBundle(
        dt=config.dt,
        T=config.T,
        tau=tau[keep],
        d_end=d_end[keep],
        lon_end=lon_end[keep],
        index=index[keep],
        lat_coeffs=lat_rows[keep],
        lon_coeffs=lon_rows[keep],
        **{k: np.ascontiguousarray(v[keep]) for k, v in fr.items()},
        x=x[keep],
        y=y[keep],
        psi=psi[keep],
        v=v[keep],
        a=a[keep],
        kappa=kappa[keep],
        dropped=int(n - len(keep)),
    )


def generate_samples(current: FrenetState, config: SamplingConfig, path: ReferencePath, **kw) -> List[TrajectorySample]:
    """Candidate set as a list of :class:`TrajectorySample` views."""
    return list(generate_bundle(current, config, path, **kw))
