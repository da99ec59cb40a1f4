"""Planner configuration.

All tunable defaults live in ``data/default_config.json``; a user file
only needs the keys it overrides.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from .cost import CostWeights
from .feasibility import VehicleParams
from .prediction import PredictionParams

__all__ = ["PlannerConfig", "load_config", "default_config_dict", "merge", "THREADS_ENV"]

THREADS_ENV = "FRENETPLAN_THREADS"


def default_config_dict() -> Dict[str, Any]:
    text = resources.files("frenetplan").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict update returning a new dict."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class PlannerConfig:
    horizon: float
    v_ref: float
    goal_decel: float
    harm: float
    parallel: bool
    threads: int
    sampling_mode: str
    density: int
    t_min: float
    d_range: Tuple[float, float]
    clip_d_to_road: bool
    levels: Dict[int, Tuple[int, int, int]]
    vehicle: VehicleParams
    weights: CostWeights
    prediction: PredictionParams
    smoothing: float
    spacing: float
    lane_change_penalty: float
    kappa_dot_bound: float
    replan_every: int
    grace_steps: int
    raw: Dict[str, Any]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PlannerConfig":
        d = merge(default_config_dict(), data)
        pl, sa, rp, sim = d["planning"], d["sampling"], d["reference_path"], d["sim"]
        threads = int(os.environ.get(THREADS_ENV, pl.get("threads", 0)) or 0)
        return cls(
            horizon=float(pl["horizon"]),
            v_ref=float(pl["v_ref"]),
            goal_decel=float(pl["goal_decel"]),
            harm=float(pl["harm"]),
            parallel=bool(pl["parallel"]),
            threads=threads,
            sampling_mode=sa["mode"],
            density=int(sa["density"]),
            t_min=float(sa["t_min"]),
            d_range=(float(sa["d_min"]), float(sa["d_max"])),
            clip_d_to_road=bool(sa["clip_d_to_road"]),
            levels={int(k): tuple(int(x) for x in v) for k, v in sa["levels"].items()},
            vehicle=VehicleParams(**{k: float(v) for k, v in d["vehicle"].items()}),
            weights=CostWeights.from_mapping(d["weights"]),
            prediction=PredictionParams(sigma0=tuple(d["prediction"]["sigma0"]), q=tuple(d["prediction"]["q"])),
            smoothing=float(rp["smoothing"]),
            spacing=float(rp["spacing"]),
            lane_change_penalty=float(rp["lane_change_penalty"]),
            kappa_dot_bound=float(rp["kappa_dot_bound"]),
            replan_every=int(sim["replan_every"]),
            grace_steps=int(sim["grace_steps"]),
            raw=d,
        )

    def with_overrides(self, override: Dict[str, Any]) -> "PlannerConfig":
        return PlannerConfig.from_dict(merge(self.raw, override))

    def with_weights(self, **weights: float) -> "PlannerConfig":
        return self.with_overrides({"weights": weights})

    @property
    def workers(self) -> int:
        if not self.parallel:
            return 1
        return self.threads if self.threads > 0 else max(2, os.cpu_count() or 2)


def load_config(source: Union[None, str, Path, Dict[str, Any]] = None) -> PlannerConfig:
    """Defaults merged with a JSON file path or a dict of overrides."""
    if source is None:
        return PlannerConfig.from_dict({})
    if isinstance(source, dict):
        return PlannerConfig.from_dict(source)
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc
    return PlannerConfig.from_dict(data)
