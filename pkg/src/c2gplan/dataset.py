"""Cost-to-go training data: extraction from trees, adaptive sampling, I/O.

Two sample origins:
* same_branch — pairs along one root branch of a tree; the cost is the arc
  length between them, which inherits the branch's (near-)optimality because
  sub-paths of optimal paths are optimal.
* cross_vertex — vertex pairs within alpha * rho whose direct Reeds-Shepp
  curve is collision-free; the curve length is exactly optimal and captures
  the expensive short-range maneuvers branches never contain.

Adaptive mode flattens the distribution of the cost/Euclidean ratio by
stratified per-bin quotas, over-representing high-curvature pairs relative to
uniform draws. Uniform mode (the ablation baseline) keeps same-branch pairs
only, unfiltered.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    DEFAULT_EXTENT,
    DEFAULT_RHO,
    Configuration,
    Footprint,
    Workspace,
    collides_many,
)
from .planners import PlannerParams, Tree, two_phase_build
from .reeds_shepp import rs_interpolate, rs_length_many, rs_sample, rs_shortest

ORIGIN_SAME_BRANCH = "same_branch"
ORIGIN_CROSS_VERTEX = "cross_vertex"


@dataclass(frozen=True)
class Sample:
    s: Configuration
    t: Configuration
    cost: float
    origin: str


@dataclass
class Dataset:
    workspace_id: str
    samples: list[Sample]
    meta: dict


@dataclass(frozen=True)
class RatioHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def nonempty_spread(self) -> float:
        """max/min count over nonempty bins; 1.0 means perfectly flat."""
        nz = self.counts[self.counts > 0]
        return float(nz.max() / nz.min()) if nz.size else math.nan

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def default_bin_edges(n_bins: int = 12, hi: float = 8.0) -> np.ndarray:
    return np.geomspace(1.0, hi, n_bins + 1)


def _ancestors(tree: Tree, node_id: int) -> list[int]:
    chain = [node_id]
    while tree.nodes[chain[-1]].parent is not None:
        chain.append(tree.nodes[chain[-1]].parent)
    return chain  # node itself first, root last


def _point_on_edge(tree: Tree, node_id: int, fraction: float) -> tuple[Configuration, float]:
    """Pose at a fraction of the node's parent edge, plus its root arc length."""
    node = tree.nodes[node_id]
    if node.parent is None:
        return node.config, 0.0
    edge_len = node.edge.total_length
    arc = fraction * edge_len
    parent_cfg = tree.nodes[node.parent].config
    pose = rs_interpolate(node.edge, arc, parent_cfg)
    return pose, tree.nodes[node.parent].cost_from_root + arc


def sample_same_branch(
    tree: Tree, k: int, rng: np.random.Generator, mid_edge: bool = True
) -> list[Sample]:
    """k (s, t, cost) triples from single branches; cost is the arc difference."""
    if len(tree.nodes) <= 1:
        raise ValueError("tree has only the root; nothing to sample")
    out = []
    n = len(tree.nodes)
    while len(out) < k:
        v = int(rng.integers(1, n))
        chain = _ancestors(tree, v)
        a = int(chain[rng.integers(0, len(chain))])
        if mid_edge:
            fv = float(rng.random())
            fa = float(rng.random())
            t_cfg, t_arc = _point_on_edge(tree, v, fv)
            s_cfg, s_arc = _point_on_edge(tree, a, fa)
        else:
            t_cfg, t_arc = tree.nodes[v].config, tree.nodes[v].cost_from_root
            s_cfg, s_arc = tree.nodes[a].config, tree.nodes[a].cost_from_root
        if s_arc > t_arc:  # both points can sit on the same edge
            s_cfg, t_cfg = t_cfg, s_cfg
            s_arc, t_arc = t_arc, s_arc
        out.append(Sample(s_cfg, t_cfg, t_arc - s_arc, ORIGIN_SAME_BRANCH))
    return out


def sample_cross_vertex(
    tree: Tree,
    w: Workspace,
    alpha: float,
    rho: float,
    k: int,
    rng: np.random.Generator,
    footprint: Footprint = Footprint(),
    delta_col: float | None = None,
) -> list[Sample]:
    """Up to k vertex pairs within alpha * rho connected by collision-free
    Reeds-Shepp curves; cost is the exact curve length."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    delta_col = delta_col if delta_col is not None else rho / 20.0
    n = len(tree.nodes)
    pos = np.array([[nd.config.x, nd.config.y] for nd in tree.nodes])
    d2 = (pos[:, None, 0] - pos[None, :, 0]) ** 2 + (pos[:, None, 1] - pos[None, :, 1]) ** 2
    iu, ju = np.triu_indices(n, k=1)
    close = d2[iu, ju] <= (alpha * rho) ** 2
    pairs = np.column_stack([iu[close], ju[close]])
    if pairs.shape[0] == 0:
        return []
    order = rng.permutation(pairs.shape[0])
    out = []
    for idx in order:
        if len(out) >= k:
            break
        u, v = int(pairs[idx, 0]), int(pairs[idx, 1])
        cu, cv = tree.nodes[u].config, tree.nodes[v].config
        path = rs_shortest(cu, cv, rho)
        pts = rs_sample(path, cu, delta_col)
        if collides_many(pts, footprint, w).any():
            continue
        out.append(Sample(cu, cv, path.total_length, ORIGIN_CROSS_VERTEX))
    return out


def compute_ratio(sample: Sample, extent: float = DEFAULT_EXTENT) -> float:
    """Cost over Euclidean position distance, clamped below at 1."""
    d = sample.s.position_distance(sample.t)
    return max(sample.cost / max(d, 1e-6 * extent), 1.0)


def ratio_histogram(samples, bin_edges: np.ndarray, extent: float = DEFAULT_EXTENT) -> RatioHistogram:
    ratios = np.array([compute_ratio(s, extent) for s in samples])
    idx = np.clip(np.searchsorted(bin_edges, ratios, side="right") - 1, 0, len(bin_edges) - 2)
    counts = np.bincount(idx, minlength=len(bin_edges) - 1)
    return RatioHistogram(np.asarray(bin_edges, dtype=float), counts)


def adaptive_filter(
    samples: list[Sample],
    bin_edges: np.ndarray,
    quota_per_bin: int,
    rng: np.random.Generator,
    extent: float = DEFAULT_EXTENT,
) -> list[Sample]:
    """Stratified flattening: keep at most quota_per_bin samples per ratio bin
    (uniformly at random), bins under quota keep everything; output shuffled."""
    if quota_per_bin <= 0:
        raise ValueError("quota_per_bin must be positive")
    ratios = np.array([compute_ratio(s, extent) for s in samples])
    idx = np.clip(np.searchsorted(bin_edges, ratios, side="right") - 1, 0, len(bin_edges) - 2)
    kept: list[int] = []
    for b in range(len(bin_edges) - 1):
        members = np.flatnonzero(idx == b)
        if members.size > quota_per_bin:
            members = rng.choice(members, size=quota_per_bin, replace=False)
        kept.extend(int(i) for i in members)
    kept_arr = np.array(sorted(kept), dtype=int)
    return [samples[i] for i in kept_arr[rng.permutation(len(kept_arr))]]


@dataclass(frozen=True)
class GridSpec:
    extent: float
    n1: int
    n2: int
    plane: str = "xy"  # "xy" (fixed theta) or "xtheta" (fixed y)
    fixed: float = 0.0

    def __post_init__(self):
        if self.n1 < 3 or self.n2 < 3:
            raise ValueError("grid needs at least 3 points per axis")
        if self.plane not in ("xy", "xtheta"):
            raise ValueError("plane must be 'xy' or 'xtheta'")


def laplacian_grid(goal: Configuration, rho: float, spec: GridSpec):
    """Obstacle-free cost-to-go field over a 2D cross-section plus its 5-point
    discrete Laplacian (NaN on the border). Diagnostic for where the cost
    manifold curves hardest."""
    a1 = np.linspace(0.0, spec.extent, spec.n1)
    if spec.plane == "xy":
        a2 = np.linspace(0.0, spec.extent, spec.n2)
        g1, g2 = np.meshgrid(a1, a2, indexing="ij")
        poses = np.column_stack([g1.ravel(), g2.ravel(), np.full(g1.size, spec.fixed)])
    else:
        a2 = np.linspace(-math.pi, math.pi, spec.n2)
        g1, g2 = np.meshgrid(a1, a2, indexing="ij")
        poses = np.column_stack([g1.ravel(), np.full(g1.size, spec.fixed), g2.ravel()])
    field_vals = rs_length_many(goal, poses, rho).reshape(spec.n1, spec.n2)
    h1 = a1[1] - a1[0]
    h2 = a2[1] - a2[0]
    lap = np.full_like(field_vals, np.nan)
    lap[1:-1, 1:-1] = (
        (field_vals[2:, 1:-1] - 2 * field_vals[1:-1, 1:-1] + field_vals[:-2, 1:-1]) / h1**2
        + (field_vals[1:-1, 2:] - 2 * field_vals[1:-1, 1:-1] + field_vals[1:-1, :-2]) / h2**2
    )
    return field_vals, lap


@dataclass
class DatasetConfig:
    rho: float = DEFAULT_RHO
    mode: str = "adaptive"
    n_trees: int = 4
    nodes_per_tree: int = 2000
    phase1: int | None = None  # defaults to a quarter of the node budget
    target_size: int = 20000
    # The adaptive filter only has an effect when it selects from a pool
    # larger than the target, so the pre-filter pool defaults to a multiple.
    pool_factor: float = 3.0
    same_branch_fraction: float = 0.8
    same_branch_per_tree: int | None = None  # overrides the derived pool split
    cross_vertex_per_tree: int | None = None
    alpha: float = 1.5
    n_bins: int = 12
    ratio_hi: float = 8.0
    master_seed: int = 0
    footprint: Footprint = field(default_factory=Footprint)

    def __post_init__(self):
        if self.mode not in ("adaptive", "uniform"):
            raise ValueError("mode must be 'adaptive' or 'uniform'")
        if self.pool_factor < 1.0:
            raise ValueError("pool_factor must be >= 1")
        if self.phase1 is None:
            self.phase1 = self.nodes_per_tree // 4

    def pool_counts(self) -> tuple[int, int]:
        """Per-tree (same_branch, cross_vertex) pool sizes for adaptive mode."""
        pool = self.pool_factor * self.target_size / self.n_trees
        same = self.same_branch_per_tree
        cross = self.cross_vertex_per_tree
        if same is None:
            same = int(math.ceil(self.same_branch_fraction * pool))
        if cross is None:
            cross = int(math.ceil((1.0 - self.same_branch_fraction) * pool))
        return same, cross


def _stage_rng(master_seed: int, workspace_id: str, stage: int) -> np.random.Generator:
    wid = int.from_bytes(hashlib.sha256(workspace_id.encode()).digest()[:4], "little")
    return np.random.default_rng(np.random.SeedSequence((master_seed, wid, stage)))


def seed_configurations(
    w: Workspace, rng: np.random.Generator, footprint: Footprint, rho: float, n: int = 4
) -> list[Configuration]:
    """Collision-free tree seeds near the quarter-extent positions with random
    headings; positions are nudged (seeded) when a quarter point is blocked."""
    quarters = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
    seeds = []
    for i in range(n):
        fx, fy = quarters[i % 4]
        base = np.array([fx * w.extent, fy * w.extent])
        for attempt in range(200):
            jitter = rng.uniform(-rho, rho, size=2) * min(attempt, 5)
            pos = np.clip(base + jitter, 0.0, w.extent)
            cfg = Configuration(pos[0], pos[1], rng.uniform(-math.pi, math.pi))
            if not collides_many(cfg.as_array()[None, :], footprint, w)[0]:
                seeds.append(cfg)
                break
        else:
            raise RuntimeError(f"no collision-free seed near quarter position {i}")
    return seeds


def build_trees(w: Workspace, cfg: DatasetConfig) -> list[Tree]:
    rng = _stage_rng(cfg.master_seed, w.id, 0)
    seeds = seed_configurations(w, rng, cfg.footprint, cfg.rho, cfg.n_trees)
    trees = []
    for i, seed_cfg in enumerate(seeds):
        params = PlannerParams(
            eta=2.0 * cfg.rho,
            delta_col=cfg.rho / 20.0,
            seed=int(_stage_rng(cfg.master_seed, w.id, 10 + i).integers(2**31)),
        )
        trees.append(
            two_phase_build(seed_cfg, w, params, cfg.phase1, cfg.nodes_per_tree,
                            rho=cfg.rho, footprint=cfg.footprint)
        )
    return trees


def build_dataset(w: Workspace, cfg: DatasetConfig, trees: list[Tree] | None = None) -> Dataset:
    """Full pipeline: trees (unless supplied), extraction, optional flattening.

    Uniform mode draws target_size same-branch samples and skips filtering.
    Adaptive mode pools same-branch and cross-vertex samples, flattens the
    ratio histogram by per-bin quota, then tops back up to target_size from
    the unused pool so both modes yield equally sized datasets.
    """
    if trees is None:
        trees = build_trees(w, cfg)

    if cfg.mode == "uniform":
        per_tree = int(math.ceil(cfg.target_size / len(trees)))
        pool: list[Sample] = []
        for i, tree in enumerate(trees):
            rng = _stage_rng(cfg.master_seed, w.id, 20 + i)
            pool.extend(sample_same_branch(tree, per_tree, rng))
        samples = pool[: cfg.target_size]
    else:
        same_per_tree, cross_per_tree = cfg.pool_counts()
        pool = []
        for i, tree in enumerate(trees):
            rng = _stage_rng(cfg.master_seed, w.id, 20 + i)
            pool.extend(sample_same_branch(tree, same_per_tree, rng))
            rng_cv = _stage_rng(cfg.master_seed, w.id, 40 + i)
            pool.extend(
                sample_cross_vertex(tree, w, cfg.alpha, cfg.rho, cross_per_tree,
                                    rng_cv, cfg.footprint)
            )
        edges = default_bin_edges(cfg.n_bins, cfg.ratio_hi)
        rng = _stage_rng(cfg.master_seed, w.id, 60)
        quota = max(1, cfg.target_size // cfg.n_bins)
        samples = adaptive_filter(pool, edges, quota, rng, w.extent)
        if len(samples) < cfg.target_size:
            chosen = {id(s) for s in samples}
            leftovers = [s for s in pool if id(s) not in chosen]
            need = min(cfg.target_size - len(samples), len(leftovers))
            extra_idx = rng.choice(len(leftovers), size=need, replace=False)
            samples.extend(leftovers[int(i)] for i in extra_idx)
        samples = samples[: cfg.target_size]

    counts = {
        ORIGIN_SAME_BRANCH: sum(1 for s in samples if s.origin == ORIGIN_SAME_BRANCH),
        ORIGIN_CROSS_VERTEX: sum(1 for s in samples if s.origin == ORIGIN_CROSS_VERTEX),
    }
    meta = {
        "workspace_id": w.id,
        "rho": cfg.rho,
        "extent": w.extent,
        "mode": cfg.mode,
        "master_seed": cfg.master_seed,
        "n_trees": len(trees),
        "counts": counts,
    }
    return Dataset(w.id, samples, meta)


def save_dataset(dataset: Dataset, csv_path) -> None:
    """Samples as CSV plus a sidecar meta JSON at <csv_path>.meta.json."""
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["s_x", "s_y", "s_theta", "t_x", "t_y", "t_theta", "cost", "origin"])
        for smp in dataset.samples:
            writer.writerow(
                [repr(smp.s.x), repr(smp.s.y), repr(smp.s.theta),
                 repr(smp.t.x), repr(smp.t.y), repr(smp.t.theta),
                 repr(float(smp.cost)), smp.origin]
            )
    with open(str(csv_path) + ".meta.json", "w") as f:
        json.dump(dataset.meta, f, indent=2)


def load_dataset(csv_path) -> Dataset:
    with open(str(csv_path) + ".meta.json") as f:
        meta = json.load(f)
    samples = []
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            samples.append(
                Sample(
                    Configuration(float(row[0]), float(row[1]), float(row[2])),
                    Configuration(float(row[3]), float(row[4]), float(row[5])),
                    float(row[6]),
                    row[7],
                )
            )
    return Dataset(meta["workspace_id"], samples, meta)
