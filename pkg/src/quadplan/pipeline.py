"""End-to-end hierarchical planner: heuristic-biased RRT* front end,
minimum jerk/snap back end with collision repair, plus flat-flag queries and
yaw profiling on the result."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GoalRegion, OccupancyGrid, inflate
from .planner import PlannerConfig, PlanStats, plan
from .regions import filter_region, oracle_region
from .trajectory import (
    BivpSpec,
    PiecewisePolynomial,
    collision_repair,
    solve_bivp,
    trapezoidal_time_allocation,
)


class PlanningFailure(Exception):
    """Front end exhausted its iteration budget without reaching the goal."""


@dataclass
class PipelineConfig:
    planner: PlannerConfig
    s: int = 3
    v_max: float = 2.0
    a_max: float = 1.0
    inflate_radius: int = 0
    yaw_mode: str = "none"  # "none" | "velocity"
    repair_max_rounds: int = 30


@dataclass
class PipelineResult:
    trajectory: PiecewisePolynomial
    stats: PlanStats
    path: np.ndarray  # front-end waypoints after pruning
    cost: float


def prune_collinear(waypoints: np.ndarray, angle_tol_deg: float = 1.0) -> np.ndarray:
    """Merge consecutive nearly-collinear waypoints; near-zero segments would
    otherwise destabilize time allocation."""
    pts = np.asarray(waypoints, dtype=float)
    if len(pts) <= 2:
        return pts
    cos_tol = math.cos(math.radians(angle_tol_deg))
    keep = [0]
    for i in range(1, len(pts) - 1):
        a = pts[i] - pts[keep[-1]]
        b = pts[i + 1] - pts[i]
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na < 1e-9 or nb < 1e-9:
            continue
        if float(np.dot(a, b) / (na * nb)) < cos_tol:
            keep.append(i)
    keep.append(len(pts) - 1)
    return pts[keep]


def plan_trajectory(
    grid: OccupancyGrid, start, goal: GoalRegion, cfg: PipelineConfig
) -> PipelineResult:
    """Full pipeline: oracle region -> filter -> biased RRT* -> waypoint
    pruning -> trapezoidal time allocation -> spline solve -> collision
    repair. The returned trajectory passes the exact collision checker and
    reproduces the rest-to-rest boundary flags."""
    planning_grid = inflate(grid, cfg.inflate_radius) if cfg.inflate_radius else grid
    start = np.asarray(start, dtype=float)
    start_voxel = planning_grid.world_to_index(start)
    goal_voxel = planning_grid.world_to_index(goal.center)
    if start_voxel is None or planning_grid.occupancy[start_voxel]:
        raise ValueError("start does not lie in free space")
    if goal_voxel is None or planning_grid.occupancy[goal_voxel]:
        raise ValueError("goal center does not lie in free space")

    region = oracle_region(planning_grid, start_voxel, goal_voxel)
    region = filter_region(region, planning_grid, start_voxel, goal_voxel)

    planner_cfg = cfg.planner
    if planner_cfg.goal is not goal:
        planner_cfg = PlannerConfig(
            step=cfg.planner.step,
            goal=goal,
            max_iterations=cfg.planner.max_iterations,
            mu1=cfg.planner.mu1,
            mu2=cfg.planner.mu2,
            target_cost=cfg.planner.target_cost,
            gamma_rrt=cfg.planner.gamma_rrt,
            rng_seed=cfg.planner.rng_seed,
        )
    result = plan(planning_grid, start, planner_cfg, mode="heuristic", region=region)
    if result.path is None:
        raise PlanningFailure(
            f"no path within {planner_cfg.max_iterations} iterations"
        )

    waypoints = prune_collinear(result.path)
    if len(waypoints) < 2:
        waypoints = np.array([start, result.path[-1]])
    durations = trapezoidal_time_allocation(waypoints, cfg.v_max, cfg.a_max)
    spec = BivpSpec.rest_to_rest(waypoints, durations, cfg.s)
    traj = solve_bivp(spec)
    traj = collision_repair(
        traj, spec, grid, cfg.v_max, cfg.a_max, max_rounds=cfg.repair_max_rounds
    )
    return PipelineResult(traj, result.stats, waypoints, result.cost)


def flat_flag_at(traj: PiecewisePolynomial, t: float, s: int | None = None) -> np.ndarray:
    """Stacked output and derivatives up to order s-1 at time t, shape (m, s):
    column k is the k-th derivative."""
    s = traj.s if s is None else s
    return np.column_stack([traj.eval(t, k) for k in range(s)])


def yaw_profile(
    traj: PiecewisePolynomial,
    t: float,
    mode: str = "velocity",
    last_yaw: float = 0.0,
    speed_eps: float = 1e-6,
) -> float:
    """Yaw at time t: atan2(vy, vx) in velocity-aligned mode, holding
    last_yaw when nearly hovering; 0 in mode 'none'."""
    if mode == "none":
        return 0.0
    v = traj.eval(t, 1)
    if float(np.hypot(v[0], v[1])) <= speed_eps:
        return last_yaw
    return float(math.atan2(v[1], v[0]))


def yaw_samples(traj: PiecewisePolynomial, times, mode: str = "velocity") -> np.ndarray:
    """Sequential yaw profile over sorted sample times with hold-last fallback."""
    out = np.zeros(len(times))
    last = 0.0
    for i, t in enumerate(times):
        last = yaw_profile(traj, t, mode=mode, last_yaw=last)
        out[i] = last
    return out
