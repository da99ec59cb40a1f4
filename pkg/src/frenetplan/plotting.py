"""SVG figures: per-cycle trajectory fans and study trajectories."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon as PolygonPatch  # noqa: E402

from .collision import obb_corners  # noqa: E402
from .scenario import Scenario, obstacle_state_at  # noqa: E402

__all__ = ["plot_fan", "plot_study"]

MAX_FAN_LINES = 400


def _draw_road(ax, scenario: Scenario):
    for la in scenario.lanelets:
        for b in (la.left_boundary, la.right_boundary):
            ax.plot(b[:, 0], b[:, 1], color="0.35", lw=0.8)
    goal = np.array(scenario.problem.goal_region)
    ax.add_patch(PolygonPatch(goal, closed=True, color="tab:green", alpha=0.15, lw=0))


def _draw_box(ax, x, y, psi, length, width, color):
    c = obb_corners(np.array([x, y]), 0.5 * length, 0.5 * width, psi)
    ax.add_patch(PolygonPatch(c, closed=True, fc=color, ec="k", lw=0.5, alpha=0.8))


def plot_fan(result, scenario: Scenario, step: int, out: Union[str, Path], vehicle=None, window: float = 60.0):
    """Candidate fan of one cycle.

    Infeasible samples are gray, feasible ones colored by cost rank
    (dark = cheap) and the chosen one black.
    """
    bundle = result.samples
    chosen = result.chosen
    fig, ax = plt.subplots(figsize=(9, 4))
    _draw_road(ax, scenario)
    if bundle is not None and len(bundle):
        feas = bundle.feasible
        infeasible = np.flatnonzero(~feas)
        stride = max(1, len(infeasible) // MAX_FAN_LINES)
        for r in infeasible[::stride]:
            ax.plot(bundle.x[r], bundle.y[r], color="0.75", lw=0.4)
        order = result.order if result.order is not None else np.flatnonzero(feas)
        cmap = plt.get_cmap("viridis")
        stride = max(1, len(order) // MAX_FAN_LINES)
        for rank, r in list(enumerate(order))[::stride][::-1]:
            ax.plot(bundle.x[r], bundle.y[r], color=cmap(rank / max(len(order) - 1, 1)), lw=0.5)
    ax.plot(chosen.x, chosen.y, color="k", lw=1.6)
    for ob in scenario.obstacles:
        st = obstacle_state_at(ob, step, scenario.dt)
        _draw_box(ax, st.x, st.y, st.psi, ob.length, ob.width, "tab:red")
    if vehicle is not None:
        _draw_box(ax, chosen.x[0], chosen.y[0], chosen.psi[0], vehicle.length, vehicle.width, "tab:blue")
    x0, y0 = float(chosen.x[0]), float(chosen.y[0])
    ax.set_xlim(x0 - 0.25 * window, x0 + 0.75 * window)
    ax.set_ylim(y0 - 0.25 * window, y0 + 0.25 * window)
    ax.set_aspect("equal")
    ax.set_title(f"step {step}: {result.category}")
    fig.savefig(out, format="svg", bbox_inches="tight")
    plt.close(fig)


def plot_study(rows: Sequence[dict], scenario: Scenario, out: Union[str, Path], label_keys: Optional[Sequence[str]] = None, mark_every: float = 1.0):
    """Executed paths of a weight study, annotated with elapsed seconds."""
    fig, ax = plt.subplots(figsize=(12, 3.5))
    _draw_road(ax, scenario)
    label_keys = label_keys or [k for k in rows[0] if k in ("velocity_offset", "dist_to_obstacle", "collision_probability")]
    cmap = plt.get_cmap("tab20")
    every = max(1, int(round(mark_every / scenario.dt)))
    for i, row in enumerate(rows):
        log = row["log"]
        xs = np.array([r.x for r in log.steps])
        ys = np.array([r.y for r in log.steps])
        label = ", ".join(f"{k}={row[k]:g}" for k in label_keys)
        color = cmap(i % 20)
        ax.plot(xs, ys, color=color, lw=1.0, label=label)
        t0 = log.steps[0].step
        for r in log.steps[::every]:
            ax.annotate(f"{(r.step - t0) * scenario.dt:.0f}", (r.x, r.y), fontsize=5, color=color)
    last = max(row["log"].final_step for row in rows)
    for ob in scenario.obstacles:
        track = np.array([[s.x, s.y] for s in (obstacle_state_at(ob, k, scenario.dt) for k in range(0, last + 1, every))])
        ax.plot(track[:, 0], track[:, 1], color="tab:red", lw=0.6, ls="--")
    ax.set_aspect("equal")
    ax.legend(fontsize=5, loc="upper left", ncol=2)
    fig.savefig(out, format="svg", bbox_inches="tight")
    plt.close(fig)
