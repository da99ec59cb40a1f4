"""Sampling-based trajectory planning in a path-relative (Frenet) frame.

Candidate trajectories are sampled as polynomials in the path frame,
transformed to Cartesian coordinates, filtered for kinematic
feasibility, ranked by a weighted cost and collision-checked until the
first admissible one is found.
"""

from .collision import OBB, RoadBoundary, check_collision, check_on_road, obb_intersects, road_boundary, sweep_obb
from .config import PlannerConfig, load_config
from .cost import COST_NAMES, CostContext, CostWeights, total_cost
from .feasibility import VehicleParams, check_feasibility
from .planner import PlanResult, PlanningFailure, min_risk_trajectory, plan_cycle, stopping_trajectory
from .polynomial import QuarticPoly, QuinticPoly, evaluate, solve_quartic, solve_quintic
from .prediction import ObstaclePrediction, PredictionParams, predict
from .refpath import (
    FrenetState,
    ReferencePath,
    build_reference_path,
    cartesian_to_frenet,
    frenet_to_cartesian,
    plan_route,
    reference_path_from_points,
)
from .sampler import SamplingConfig, TrajectoryBundle, TrajectorySample, generate_bundle, generate_samples
from .scenario import CartesianState, Lanelet, Obstacle, PlanningProblem, Scenario, ScenarioError, load_scenario

__version__ = "0.1.0"
