"""Learned cost-to-go planning for a Reeds-Shepp car.

Pipeline: seeded random workspaces -> two-phase RRT* trees with Reeds-Shepp
steering -> adaptively sampled (start, goal, cost) training triples -> a small
MLP cost-to-go regressor -> greedy trajectory generation that descends the
predicted cost-to-go under collision constraints.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    Configuration,
    Footprint,
    NormalizedConfig,
    Workspace,
    collides,
    normalize,
    path_collides,
    random_workspace,
    wrap_angle,
)
from .reeds_shepp import RSPath, RSSegment, rs_interpolate, rs_length, rs_shortest, rs_truncate  # noqa: F401
from .kinematics import ControlInput, ControlSet, constraint_residual, rollout, step  # noqa: F401
from .planners import PlannerParams, Tree, TreeNode, extract_path, rrt_plan, rrt_star_build, rrt_star_plan, two_phase_build  # noqa: F401
from .dataset import Dataset, DatasetConfig, RatioHistogram, Sample, adaptive_filter, build_dataset, compute_ratio, laplacian_grid, sample_cross_vertex, sample_same_branch  # noqa: F401
from .c2g_model import C2GModel, TrainConfig, TrainReport, init_model, load_model, predict, save_model, train  # noqa: F401
from .c2g_planner import StopCriteria, Trajectory, anti_cycle_guard, plan, trajectory_length  # noqa: F401
