"""Sampling-based planners over Reeds-Shepp steering.

One seeded growth engine backs three entry points: plain RRT (no rewiring,
first solution wins), RRT* (choose-parent + rewire, best solution at budget)
and the two-phase variant that first attaches depth-1 children by exact
collision-free Reeds-Shepp curves from the seed (their costs are optimal by
construction and are never re-parented), then explores the rest with RRT*.

Nearest and near queries use the Reeds-Shepp length as the metric. The scans
are position-pruned: the Euclidean position distance lower-bounds the RS
length, so candidates are evaluated in Euclidean order until the bound
exceeds the best length found, which keeps queries exact but roughly
constant-cost on large trees.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .c2g_planner import Trajectory
from .geometry import (
    DEFAULT_RHO,
    Configuration,
    Footprint,
    Workspace,
    collides_many,
    wrap_angle,
)
from .reeds_shepp import (
    RSPath,
    rs_interpolate,
    rs_length_many,
    rs_path_from_solution,
    rs_reverse,
    rs_sample,
    rs_shortest,
    rs_solve_many,
    rs_truncate,
)

PHASE_INITIAL = "initial"
PHASE_EXPLORED = "explored"


@dataclass
class TreeNode:
    config: Configuration
    parent: int | None
    edge: RSPath | None  # parent -> this
    cost_from_root: float
    phase: str


@dataclass
class Tree:
    root: Configuration
    nodes: list[TreeNode]
    workspace_id: str
    rho: float

    def __len__(self) -> int:
        return len(self.nodes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "root": {"x": self.root.x, "y": self.root.y, "theta": self.root.theta},
                "workspace_id": self.workspace_id,
                "rho": self.rho,
                "nodes": [
                    {
                        "x": n.config.x,
                        "y": n.config.y,
                        "theta": n.config.theta,
                        "parent": n.parent,
                        "cost": n.cost_from_root,
                        "phase": n.phase,
                    }
                    for n in self.nodes
                ],
            }
        )


@dataclass(frozen=True)
class PlannerParams:
    max_iters: int = 30000
    goal_bias: float = 0.03
    eta: float = 2.0 * DEFAULT_RHO
    rewire_radius_scale: float = 0.94
    delta_col: float = DEFAULT_RHO / 20.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must be a probability")
        if self.eta <= 0 or self.delta_col <= 0:
            raise ValueError("eta and delta_col must be positive")


class _Builder:
    def __init__(self, root: Configuration, w: Workspace, p: PlannerParams,
                 rho: float, footprint: Footprint):
        if collides_many(root.as_array()[None, :], footprint, w)[0]:
            raise ValueError("seed configuration collides")
        self.w = w
        self.p = p
        self.rho = rho
        self.fp = footprint
        self.nodes = [TreeNode(root, None, None, 0.0, PHASE_INITIAL)]
        self.children: dict[int, list[int]] = {0: []}
        self.poses = np.zeros((1024, 3))
        self.poses[0] = root.as_array()
        self.costs = np.zeros(1024)

    def __len__(self):
        return len(self.nodes)

    def _grow_arrays(self):
        if len(self.nodes) >= self.poses.shape[0]:
            self.poses = np.vstack([self.poses, np.zeros_like(self.poses)])
            self.costs = np.concatenate([self.costs, np.zeros_like(self.costs)])

    def add(self, config: Configuration, parent: int, edge: RSPath, phase: str) -> int:
        nid = len(self.nodes)
        self._grow_arrays()
        cost = self.nodes[parent].cost_from_root + edge.total_length
        self.nodes.append(TreeNode(config, parent, edge, cost, phase))
        self.poses[nid] = config.as_array()
        self.costs[nid] = cost
        self.children[nid] = []
        self.children[parent].append(nid)
        return nid

    def nearest(self, q: Configuration) -> int:
        """Exact nearest by RS length, position-pruned: evaluate the Euclidean-
        closest block first, then only nodes whose position distance (a lower
        bound on RS length) still beats the best length found."""
        n = len(self.nodes)
        d_pos = np.hypot(self.poses[:n, 0] - q.x, self.poses[:n, 1] - q.y)
        k0 = min(n, 128)
        first = np.argpartition(d_pos, k0 - 1)[:k0] if k0 < n else np.arange(n)
        lengths = rs_length_many(q, self.poses[first], self.rho)
        k = int(np.argmin(lengths))
        best_rs, best_id = float(lengths[k]), int(first[k])
        if k0 < n:
            rest_mask = d_pos < best_rs
            rest_mask[first] = False
            rest = np.flatnonzero(rest_mask)
            if rest.size:
                lengths = rs_length_many(q, self.poses[rest], self.rho)
                k = int(np.argmin(lengths))
                if lengths[k] < best_rs:
                    best_id = int(rest[k])
        return best_id

    def radius(self) -> float:
        n = max(len(self.nodes), 2)
        return self.p.rewire_radius_scale * self.w.extent * (math.log(n) / n) ** (1.0 / 3.0)

    def edge_free(self, path: RSPath, start: Configuration) -> bool:
        pts = rs_sample(path, start, self.p.delta_col)
        return not collides_many(pts, self.fp, self.w).any()

    def _propagate(self, nid: int):
        stack = [nid]
        while stack:
            cur = stack.pop()
            for ch in self.children[cur]:
                node = self.nodes[ch]
                node.cost_from_root = self.nodes[cur].cost_from_root + node.edge.total_length
                self.costs[ch] = node.cost_from_root
                stack.append(ch)

    def insert_rewire(self, new_cfg: Configuration, nearest_id: int) -> int | None:
        """Choose-parent among near nodes, insert, then rewire the neighborhood."""
        n = len(self.nodes)
        radius = self.radius()
        d_pos = np.hypot(self.poses[:n, 0] - new_cfg.x, self.poses[:n, 1] - new_cfg.y)
        prefilter = d_pos <= radius  # position distance lower-bounds RS length
        prefilter[nearest_id] = True
        cand = np.flatnonzero(prefilter)
        # Paths are solved new -> candidate; the candidate -> new edge is the
        # reversed curve over identical geometry.
        lengths, words, params = rs_solve_many(new_cfg, self.poses[cand], self.rho)
        if (lengths == 0.0).any():
            return None  # duplicate configuration
        keep = (lengths <= radius) | (cand == nearest_id)
        cand, lengths, words, params = cand[keep], lengths[keep], words[keep], params[keep]

        path_cache: dict[int, RSPath] = {}
        free_cache: dict[int, bool] = {}

        def out_path(i: int) -> RSPath:
            if i not in path_cache:
                path_cache[i] = rs_path_from_solution(words[i], params[i], self.rho)
            return path_cache[i]

        def is_free(i: int) -> bool:
            if i not in free_cache:
                free_cache[i] = self.edge_free(out_path(i), new_cfg)
            return free_cache[i]

        via = self.costs[cand] + lengths
        new_id = None
        for i in np.argsort(via, kind="stable"):
            if is_free(int(i)):
                parent = int(cand[i])
                new_id = self.add(new_cfg, parent, rs_reverse(out_path(int(i))), PHASE_EXPLORED)
                break
        if new_id is None:
            return None

        new_cost = self.nodes[new_id].cost_from_root
        for i, node_id in enumerate(cand):
            node = self.nodes[int(node_id)]
            if node.phase == PHASE_INITIAL or node.parent is None:
                continue
            rewired = float(new_cost + lengths[i])
            if rewired < node.cost_from_root - 1e-9 and is_free(int(i)):
                self.children[node.parent].remove(int(node_id))
                node.parent = new_id
                node.edge = out_path(int(i))
                node.cost_from_root = rewired
                self.costs[int(node_id)] = rewired
                self.children[new_id].append(int(node_id))
                self._propagate(int(node_id))
        return new_id

    def insert_plain(self, new_cfg: Configuration, parent: int, edge: RSPath) -> int:
        return self.add(new_cfg, parent, edge, PHASE_EXPLORED)

    def tree(self, workspace_id: str) -> Tree:
        return Tree(self.nodes[0].config, self.nodes, workspace_id, self.rho)


def _sample_config(rng: np.random.Generator, extent: float) -> Configuration:
    x, y = rng.uniform(0.0, extent, size=2)
    theta = rng.uniform(-math.pi, math.pi)
    return Configuration(x, y, theta)


def _steer(builder: _Builder, nearest_id: int, target: Configuration, eta: float):
    nearest_cfg = builder.nodes[nearest_id].config
    path = rs_shortest(nearest_cfg, target, builder.rho)
    if path.total_length == 0.0:
        return None, None
    path = rs_truncate(path, eta)
    new_cfg = rs_interpolate(path, path.total_length, nearest_cfg)
    return path, new_cfg


def _grow(
    seed_config: Configuration,
    w: Workspace,
    p: PlannerParams,
    budget_nodes: int,
    rho: float,
    footprint: Footprint,
    m1: int = 0,
    rewire: bool = True,
    goal: Configuration | None = None,
    stop_first_goal: bool = False,
    goal_eps_pos: float | None = None,
    goal_eps_theta: float = 0.1,
):
    """Shared growth loop. Returns (builder, goal_hits) where goal_hits maps
    node id -> optional collision-free docking path to the goal."""
    rng = np.random.default_rng(p.seed)
    builder = _Builder(seed_config, w, p, rho, footprint)
    goal_eps_pos = goal_eps_pos if goal_eps_pos is not None else rho / 5.0
    goal_hits: dict[int, RSPath | None] = {}

    for _ in range(m1):
        q = _sample_config(rng, w.extent)
        if len(builder) >= budget_nodes:
            break
        if collides_many(q.as_array()[None, :], footprint, w)[0]:
            continue
        direct = rs_shortest(seed_config, q, rho)
        if direct.total_length > 0.0 and builder.edge_free(direct, seed_config):
            builder.add(q, 0, direct, PHASE_INITIAL)

    if goal is not None:
        dpos = seed_config.position_distance(goal)
        dth = abs(wrap_angle(seed_config.theta - goal.theta))
        if dpos < goal_eps_pos and dth < goal_eps_theta:
            dock = rs_shortest(seed_config, goal, rho)
            free = dock.total_length == 0.0 or builder.edge_free(dock, seed_config)
            goal_hits[0] = dock if free else None
            if stop_first_goal:
                return builder, goal_hits

    iters = 0
    while len(builder) < budget_nodes and iters < p.max_iters:
        iters += 1
        if goal is not None and rng.random() < p.goal_bias:
            q = goal
        else:
            q = _sample_config(rng, w.extent)
        if collides_many(q.as_array()[None, :], footprint, w)[0]:
            continue
        nearest_id = builder.nearest(q)
        path, new_cfg = _steer(builder, nearest_id, q, p.eta)
        if path is None:
            continue
        if rewire:
            if not builder.edge_free(path, builder.nodes[nearest_id].config):
                continue
            new_id = builder.insert_rewire(new_cfg, nearest_id)
            if new_id is None:
                continue
        else:
            if not builder.edge_free(path, builder.nodes[nearest_id].config):
                continue
            new_id = builder.insert_plain(new_cfg, nearest_id, path)

        if goal is not None:
            dpos = new_cfg.position_distance(goal)
            dth = abs(wrap_angle(new_cfg.theta - goal.theta))
            if dpos < goal_eps_pos and dth < goal_eps_theta:
                dock = rs_shortest(new_cfg, goal, rho)
                free = dock.total_length == 0.0 or builder.edge_free(dock, new_cfg)
                goal_hits[new_id] = dock if free else None
                if stop_first_goal:
                    break
    return builder, goal_hits


def rrt_star_build(
    seed_config: Configuration,
    w: Workspace,
    p: PlannerParams,
    budget_nodes: int,
    rho: float = DEFAULT_RHO,
    footprint: Footprint = Footprint(),
) -> Tree:
    """Coverage tree rooted at the seed; nodes carry root costs after rewiring."""
    builder, _ = _grow(seed_config, w, p, budget_nodes, rho, footprint, m1=0, rewire=True)
    return builder.tree(w.id)


def two_phase_build(
    seed_config: Configuration,
    w: Workspace,
    p: PlannerParams,
    m1: int,
    budget_nodes: int,
    rho: float = DEFAULT_RHO,
    footprint: Footprint = Footprint(),
) -> Tree:
    """Phase 1 attaches up to m1 direct Reeds-Shepp children of the seed (cost
    exactly optimal, never re-parented); phase 2 continues as RRT*."""
    if m1 > budget_nodes:
        raise ValueError("m1 cannot exceed the node budget")
    builder, _ = _grow(seed_config, w, p, budget_nodes, rho, footprint, m1=m1, rewire=True)
    return builder.tree(w.id)


def _tree_trajectory(builder: _Builder, node_id: int, dock: RSPath | None,
                     delta_col: float) -> Trajectory:
    traj = extract_path(builder.tree(""), node_id, delta_col)
    if dock is not None and dock.total_length > 0.0:
        start = builder.nodes[node_id].config
        pts = rs_sample(dock, start, delta_col)
        traj.waypoints.extend(Configuration(*pt) for pt in pts[1:])
        traj.rs_arc_length += dock.total_length
        traj.length = traj.rs_arc_length
    return traj


def rrt_plan(
    start: Configuration,
    goal: Configuration,
    w: Workspace,
    p: PlannerParams,
    rho: float = DEFAULT_RHO,
    footprint: Footprint = Footprint(),
    budget_nodes: int | None = None,
) -> Trajectory:
    """Goal-biased RRT; returns the first trajectory reaching the goal region,
    or a failed trajectory after the iteration budget."""
    t0 = time.perf_counter()
    if collides_many(goal.as_array()[None, :], footprint, w)[0]:
        raise ValueError("goal configuration collides")
    budget = budget_nodes if budget_nodes is not None else p.max_iters
    builder, hits = _grow(
        start, w, p, budget, rho, footprint,
        m1=0, rewire=False, goal=goal, stop_first_goal=True,
    )
    traj = Trajectory(waypoints=[start]) if not hits else None
    if hits:
        node_id, dock = next(iter(hits.items()))
        traj = _tree_trajectory(builder, node_id, dock, p.delta_col)
        traj.success = True
    traj.wall_time = time.perf_counter() - t0
    return traj


def rrt_star_plan(
    start: Configuration,
    goal: Configuration,
    w: Workspace,
    p: PlannerParams,
    budget_nodes: int,
    rho: float = DEFAULT_RHO,
    footprint: Footprint = Footprint(),
) -> Trajectory:
    """Goal-biased RRT*; grows to the full budget and returns the best
    goal-region trajectory found."""
    t0 = time.perf_counter()
    if collides_many(goal.as_array()[None, :], footprint, w)[0]:
        raise ValueError("goal configuration collides")
    builder, hits = _grow(
        start, w, p, budget_nodes, rho, footprint,
        m1=0, rewire=True, goal=goal, stop_first_goal=False,
    )
    best_id, best_cost, best_dock = None, math.inf, None
    for node_id, dock in hits.items():
        cost = builder.nodes[node_id].cost_from_root
        cost += dock.total_length if dock is not None else 0.0
        if cost < best_cost:
            best_id, best_cost, best_dock = node_id, cost, dock
    if best_id is None:
        traj = Trajectory(waypoints=[start])
    else:
        traj = _tree_trajectory(builder, best_id, best_dock, p.delta_col)
        traj.success = True
    traj.wall_time = time.perf_counter() - t0
    return traj


def extract_path(tree: Tree, node_id: int, delta_col: float | None = None) -> Trajectory:
    """Root-to-node trajectory with waypoints sampled at the collision spacing."""
    if not 0 <= node_id < len(tree.nodes):
        raise ValueError(f"invalid node id {node_id}")
    delta_col = delta_col if delta_col is not None else tree.rho / 20.0
    chain = []
    cur = node_id
    while cur is not None:
        chain.append(cur)
        cur = tree.nodes[cur].parent
    chain.reverse()

    waypoints = [tree.root]
    total = 0.0
    for nid in chain[1:]:
        node = tree.nodes[nid]
        start = tree.nodes[node.parent].config
        pts = rs_sample(node.edge, start, delta_col)
        waypoints.extend(Configuration(*pt) for pt in pts[1:])
        total += node.edge.total_length
    return Trajectory(
        waypoints=waypoints,
        controls=[],
        length=total,
        success=True,
        rs_arc_length=total,
    )
