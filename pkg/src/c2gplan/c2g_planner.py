"""Greedy trajectory generation by one-step minimization of predicted cost-to-go.

Each step rolls the sampled control set forward, drops successors that leave
the extent, collide along their step arc, or revisit recent history, then
moves to the survivor with the lowest predicted cost to the goal. Terminal
docking with the exact Reeds-Shepp curve (collision-checked) closes the final
gap; it can be disabled for ablations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import c2g_model as c2g
from .geometry import (
    DEFAULT_RHO,
    Configuration,
    Footprint,
    Workspace,
    collides_many,
    normalize_array,
    wrap_angle,
)
from .kinematics import ControlInput, ControlSet, rollout_array
from .reeds_shepp import rs_sample, rs_shortest


@dataclass(frozen=True)
class StopCriteria:
    eps_cost: float
    eps_pos: float
    eps_theta: float
    max_steps: int = 500

    def __post_init__(self):
        if min(self.eps_cost, self.eps_pos, self.eps_theta) <= 0 or self.max_steps <= 0:
            raise ValueError("stop criteria must be positive")

    @staticmethod
    def defaults(rho: float, extent: float) -> "StopCriteria":
        return StopCriteria(eps_cost=0.05 * extent, eps_pos=rho / 5.0, eps_theta=0.1)


@dataclass
class Trajectory:
    """Planned motion: stepped waypoints plus (optionally) exact RS arc tails.

    length = sum of control step lengths + rs_arc_length, where rs_arc_length
    covers terminal docking arcs and tree-edge trajectories.
    """

    waypoints: list[Configuration] = field(default_factory=list)
    controls: list[ControlInput] = field(default_factory=list)
    length: float = 0.0
    success: bool = False
    wall_time: float = 0.0
    stalled: bool = False
    rs_arc_length: float = 0.0


def trajectory_length(t: Trajectory) -> float:
    return math.fsum(u.step_len for u in t.controls) + t.rs_arc_length


def anti_cycle_guard(history, q_new, eps_pos: float, eps_theta: float, window: int = 20) -> bool:
    """Permit a successor unless it nearly revisits one of the recent poses."""
    for past in list(history)[-window:]:
        if (
            math.hypot(q_new.x - past.x, q_new.y - past.y) < eps_pos / 2.0
            and abs(wrap_angle(q_new.theta - past.theta)) < eps_theta / 2.0
        ):
            return False
    return True


def _goal_reached(q: Configuration, goal: Configuration, sc: StopCriteria) -> bool:
    return (
        math.hypot(q.x - goal.x, q.y - goal.y) < sc.eps_pos
        and abs(wrap_angle(q.theta - goal.theta)) < sc.eps_theta
    )


def _make_predictor(model, goal: Configuration, extent: float):
    """Batch cost evaluator for (n, 3) poses against a fixed goal.

    Accepts a trained C2GModel or any callable(poses, goal) -> costs, which
    lets tests drive the planner with an exact cost oracle.
    """
    if isinstance(model, c2g.C2GModel):
        goal_norm = normalize_array(goal.as_array()[None, :], extent)[0]

        def predictor(poses: np.ndarray) -> np.ndarray:
            x = np.empty((poses.shape[0], 8))
            x[:, :4] = normalize_array(poses, extent)
            x[:, 4:] = goal_norm
            return c2g.predict_batch(model, x)

        return predictor
    return lambda poses: np.asarray(model(poses, goal), dtype=float)


def _step_arc_poses(q: Configuration, successors: np.ndarray, cs: ControlSet,
                    fractions: np.ndarray) -> np.ndarray:
    """Poses along every control's step arc, shape (n_controls * n_frac, 3)."""
    controls = cs.controls()
    gear = np.array([u.gear for u in controls], dtype=float)
    kappa = np.array([u.curvature for u in controls], dtype=float)
    s = (gear * cs.step_len)[:, None] * fractions[None, :]
    theta = q.theta + kappa[:, None] * s
    with np.errstate(divide="ignore", invalid="ignore"):
        x = q.x + (np.sin(theta) - math.sin(q.theta)) / kappa[:, None]
        y = q.y - (np.cos(theta) - math.cos(q.theta)) / kappa[:, None]
    straight = kappa == 0.0
    x[straight] = q.x + s[straight] * math.cos(q.theta)
    y[straight] = q.y + s[straight] * math.sin(q.theta)
    return np.stack([x, y, theta], axis=2).reshape(-1, 3)


def plan(
    start: Configuration,
    goal: Configuration,
    w: Workspace,
    model,
    cs: ControlSet | None = None,
    sc: StopCriteria | None = None,
    footprint: Footprint = Footprint(),
    delta_col: float | None = None,
    docking: bool = True,
    guard_window: int = 20,
) -> Trajectory:
    """Greedy descent on the predicted cost-to-go from start to goal."""
    t_begin = time.perf_counter()
    rho = cs.rho if cs is not None else (model.rho if isinstance(model, c2g.C2GModel) else DEFAULT_RHO)
    cs = cs if cs is not None else ControlSet(rho=rho)
    sc = sc if sc is not None else StopCriteria.defaults(cs.rho, w.extent)
    delta_col = delta_col if delta_col is not None else cs.rho / 20.0
    if collides_many(start.as_array()[None, :], footprint, w)[0]:
        raise ValueError("start configuration collides")
    if collides_many(goal.as_array()[None, :], footprint, w)[0]:
        raise ValueError("goal configuration collides")

    predictor = _make_predictor(model, goal, w.extent)
    controls = cs.controls()
    n_frac = max(2, int(math.ceil(cs.step_len / delta_col)) + 1)
    fractions = np.linspace(0.0, 1.0, n_frac)[1:]  # current pose already checked

    traj = Trajectory(waypoints=[start])
    q = start
    history: list[Configuration] = [start]
    for _ in range(sc.max_steps):
        if _goal_reached(q, goal, sc):
            traj.success = True
            break
        if docking and q.position_distance(goal) <= 2.0 * cs.rho:
            dock = rs_shortest(q, goal, cs.rho)
            dock_poses = rs_sample(dock, q, delta_col)
            if not collides_many(dock_poses, footprint, w).any():
                traj.waypoints.extend(Configuration(*p) for p in dock_poses[1:])
                traj.rs_arc_length += dock.total_length
                traj.success = True
                break

        successors = rollout_array(q, controls)
        arc_poses = _step_arc_poses(q, successors, cs, fractions)
        arc_hits = collides_many(arc_poses, footprint, w).reshape(len(controls), -1)
        feasible = ~arc_hits.any(axis=1)
        if feasible.any():
            for i in np.flatnonzero(feasible):
                cand = Configuration(*successors[i])
                if not anti_cycle_guard(history, cand, sc.eps_pos, sc.eps_theta, guard_window):
                    feasible[i] = False
        if not feasible.any():
            traj.stalled = True
            break

        idx = np.flatnonzero(feasible)
        costs = predictor(successors[idx])
        pick = int(idx[np.argmin(costs)])
        q = Configuration(*successors[pick])
        traj.controls.append(controls[pick])
        traj.waypoints.append(q)
        history.append(q)
        if len(history) > guard_window + 1:
            history.pop(0)
        if float(costs[np.argmin(costs)]) < sc.eps_cost:
            traj.success = True
            break
        if _goal_reached(q, goal, sc):
            traj.success = True
            break

    traj.length = trajectory_length(traj)
    traj.wall_time = time.perf_counter() - t_begin
    return traj
