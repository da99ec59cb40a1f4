"""Quintic and quartic boundary-value polynomials.

Both solvers fix ``c0..c2`` from the start state and solve the remaining
3x3 (quintic) or 2x2 (quartic) system in closed form. All functions
broadcast over array-valued boundary conditions, so a whole sampling
grid is solved in one call. Conditioning degrades roughly like ``tau**5``;
durations in [0.1, 10] s are well within double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuinticPoly", "QuarticPoly", "solve_quintic", "solve_quartic", "evaluate", "DurationError"]


class DurationError(ValueError):
    """Raised for a non-positive polynomial duration."""


@dataclass(frozen=True, eq=False)
class _Poly:
    coeffs: np.ndarray  # (..., order + 1), ascending powers

    def __call__(self, t):
        return evaluate(self, t)

    def __getitem__(self, idx):
        return type(self)(self.coeffs[idx])

    def __len__(self):
        return len(self.coeffs) if self.coeffs.ndim > 1 else 1


class QuinticPoly(_Poly):
    pass


class QuarticPoly(_Poly):
    pass


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau > 0)):
        raise DurationError("polynomial duration must be positive")
    return tau


def solve_quintic(start, end, tau) -> QuinticPoly:
    """Quintic matching position, velocity and acceleration at both ends.

    ``start = (x0, v0, a0)`` and ``end = (x1, v1, a1)``; components may be
    arrays that broadcast against ``tau``.
    """
    tau = _check_tau(tau)
    x0, v0, a0 = (np.asarray(c, dtype=float) for c in start)
    x1, v1, a1 = (np.asarray(c, dtype=float) for c in end)
    t2 = tau * tau
    t3 = t2 * tau
    dx = x1 - x0
    c3 = (20.0 * dx - (8.0 * v1 + 12.0 * v0) * tau - (3.0 * a0 - a1) * t2) / (2.0 * t3)
    c4 = (-30.0 * dx + (14.0 * v1 + 16.0 * v0) * tau + (3.0 * a0 - 2.0 * a1) * t2) / (2.0 * t3 * tau)
    c5 = (12.0 * dx - 6.0 * (v1 + v0) * tau - (a0 - a1) * t2) / (2.0 * t3 * t2)
    parts = np.broadcast_arrays(x0, v0, 0.5 * a0, c3, c4, c5)
    return QuinticPoly(np.stack(parts, axis=-1))


def solve_quartic(start, end, tau) -> QuarticPoly:
    """Quartic matching the start state and end velocity/acceleration.

    ``start = (x0, v0, a0)`` and ``end = (v1, a1)``; the end position is free.
    """
    tau = _check_tau(tau)
    x0, v0, a0 = (np.asarray(c, dtype=float) for c in start)
    v1, a1 = (np.asarray(c, dtype=float) for c in end)
    dv = v1 - v0 - a0 * tau
    da = a1 - a0
    c3 = (3.0 * dv - da * tau) / (3.0 * tau * tau)
    c4 = (da * tau - 2.0 * dv) / (4.0 * tau * tau * tau)
    parts = np.broadcast_arrays(x0, v0, 0.5 * a0, c3, c4)
    return QuarticPoly(np.stack(parts, axis=-1))


def evaluate(poly: _Poly, t):
    """Value and first three derivatives at ``t`` (Horner scheme).

    ``t`` broadcasts against the leading axes of ``poly.coeffs``; scalar
    inputs return Python floats.
    """
    c = poly.coeffs
    t = np.asarray(t, dtype=float)
    n = c.shape[-1]
    p = np.zeros(np.broadcast_shapes(c.shape[:-1], t.shape))
    dp = np.zeros_like(p)
    ddp = np.zeros_like(p)
    dddp = np.zeros_like(p)
    for i in range(n - 1, -1, -1):
        dddp = dddp * t + ddp
        ddp = ddp * t + dp
        dp = dp * t + p
        p = p * t + c[..., i]
    if p.ndim == 0:
        return float(p), float(dp), float(2.0 * ddp), float(6.0 * dddp)
    return p, dp, 2.0 * ddp, 6.0 * dddp
