"""Command-line pipeline: workspace generation, datasets, training, planning,
and the benchmark harness comparing planners on shared seeded query sets.

Exit codes: 0 success, 2 usage error, 3 runtime failure. C2G_SEED overrides
seed defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import c2g_model, c2g_planner, dataset as ds, planners
from .geometry import (
    DEFAULT_EXTENT,
    DEFAULT_RHO,
    Box,
    Configuration,
    Disc,
    Footprint,
    Workspace,
    collides_many,
    random_workspace,
)
from .kinematics import ControlSet
from .reeds_shepp import rs_sample, rs_shortest

PLANNER_NAMES = ("RRT", "RRTStar", "C2G", "C2G_Uniform", "RS_Optimal")


def _default_seed() -> int:
    env = os.environ.get("C2G_SEED")
    return int(env) if env else 0


def _parse_config(text: str) -> Configuration:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("configuration must be x,y,theta")
    return Configuration(float(parts[0]), float(parts[1]), float(parts[2]))


# ---------------------------------------------------------------------------
# SVG rendering (dependency-free)
# ---------------------------------------------------------------------------


def _svg_footprint(cfg: Configuration, fp: Footprint, color: str) -> str:
    corners = []
    c, s = math.cos(cfg.theta), math.sin(cfg.theta)
    for bx, by in fp.body_corners():
        corners.append((cfg.x + c * bx - s * by, cfg.y + s * bx + c * by))
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in corners)
    # heading tick from the reference point to the front edge
    tip_x = cfg.x + c * (fp.length - fp.rear_offset)
    tip_y = cfg.y + s * (fp.length - fp.rear_offset)
    return (
        f'<polygon points="{pts}" fill="{color}" fill-opacity="0.6" stroke="{color}"/>'
        f'<line x1="{cfg.x:.2f}" y1="{cfg.y:.2f}" x2="{tip_x:.2f}" y2="{tip_y:.2f}" '
        f'stroke="black" stroke-width="2"/>'
    )


def render_svg(w: Workspace, trajectory, start: Configuration, goal: Configuration,
               fp: Footprint, path) -> None:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w.extent} {w.extent}" '
        f'width="600" height="600">',
        # flip y so the world is y-up
        f'<g transform="translate(0,{w.extent}) scale(1,-1)">',
        f'<rect x="0" y="0" width="{w.extent}" height="{w.extent}" fill="white" stroke="black"/>',
    ]
    for obs in w.obstacles:
        if isinstance(obs, Disc):
            parts.append(
                f'<circle cx="{obs.cx:.2f}" cy="{obs.cy:.2f}" r="{obs.radius:.2f}" fill="gray"/>'
            )
        else:
            parts.append(
                f'<rect x="{obs.xmin:.2f}" y="{obs.ymin:.2f}" width="{obs.xmax - obs.xmin:.2f}" '
                f'height="{obs.ymax - obs.ymin:.2f}" fill="gray"/>'
            )
    if trajectory is not None and trajectory.waypoints:
        pts = " ".join(f"{q.x:.2f},{q.y:.2f}" for q in trajectory.waypoints)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="magenta" stroke-width="2"/>')
    parts.append(_svg_footprint(start, fp, "blue"))
    parts.append(_svg_footprint(goal, fp, "red"))
    parts.append("</g></svg>")
    Path(path).write_text("\n".join(parts))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_workspaces(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        w = random_workspace(
            seed=args.seed + i,
            n_obstacles=args.obstacles,
            extent=args.extent,
            workspace_id=f"ws-{args.seed + i:04d}",
        )
        w.save(out / f"{w.id}.json")
        print(f"wrote {out / (w.id + '.json')}")
    return 0


def cmd_gen_dataset(args) -> int:
    w = Workspace.load(args.workspace)
    cfg = ds.DatasetConfig(
        rho=args.rho,
        mode=args.mode,
        master_seed=args.seed,
        target_size=args.target_size,
        n_trees=args.trees,
        nodes_per_tree=args.nodes_per_tree,
    )
    trees = ds.build_trees(w, cfg)
    data = ds.build_dataset(w, cfg, trees=trees)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ds.save_dataset(data, out)
    hist = ds.ratio_histogram(data.samples, ds.default_bin_edges(), w.extent)
    hist.save_csv(str(out) + ".hist.csv")
    with open(str(out) + ".trees.json", "w") as f:
        f.write("[" + ",".join(t.to_json() for t in trees) + "]")
    print(f"wrote {out} ({len(data.samples)} samples, mode={args.mode})")
    return 0


def cmd_train(args) -> int:
    data = ds.load_dataset(args.dataset)
    cfg = c2g_model.TrainConfig(
        learning_rate=args.lr, batch_size=args.batch, epochs=args.epochs, seed=args.seed
    )
    model, report = c2g_model.train(data, cfg)
    c2g_model.save_model(model, args.out_model)
    report.save_csv(str(args.out_model) + ".report.csv")
    print(
        f"trained {args.out_model}: best epoch {report.best_epoch}, "
        f"validation RMSE {report.final_rmse:.3f} length units"
    )
    return 0


def cmd_plan(args) -> int:
    model = c2g_model.load_model(args.model)
    w = Workspace.load(args.workspace)
    fp = Footprint()
    cs = ControlSet(rho=model.rho)
    traj = c2g_planner.plan(args.start, args.goal, w, model, cs=cs)
    summary = {
        "success": traj.success,
        "length": traj.length,
        "wall_time": traj.wall_time,
        "steps": len(traj.controls),
        "stalled": traj.stalled,
    }
    print(json.dumps(summary))
    if args.svg:
        render_svg(w, traj, args.start, args.goal, fp, args.svg)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["x", "y", "theta"])
            for q in traj.waypoints:
                writer.writerow([repr(q.x), repr(q.y), repr(q.theta)])
    return 0


def _sample_queries(w: Workspace, fp: Footprint, n: int, rng: np.random.Generator):
    queries = []
    while len(queries) < n:
        pose = np.array([*rng.uniform(0.0, w.extent, 2), rng.uniform(-math.pi, math.pi)])
        pose2 = np.array([*rng.uniform(0.0, w.extent, 2), rng.uniform(-math.pi, math.pi)])
        if collides_many(pose[None, :], fp, w)[0] or collides_many(pose2[None, :], fp, w)[0]:
            continue
        queries.append((Configuration(*pose), Configuration(*pose2)))
    return queries


def _run_planner(name: str, start, goal, w, args, models) -> tuple[bool, float, float]:
    rho = args.rho
    fp = Footprint()
    if name == "RS_Optimal":
        t0 = time.perf_counter()
        path = rs_shortest(start, goal, rho)
        wall = time.perf_counter() - t0
        pts = rs_sample(path, start, rho / 20.0)
        free = not collides_many(pts, fp, w).any()
        return free, path.total_length, wall
    if name == "RRT":
        p = planners.PlannerParams(seed=args.seed, eta=2 * rho, delta_col=rho / 20.0,
                                   max_iters=args.rrt_iters)
        traj = planners.rrt_plan(start, goal, w, p, rho=rho)
        return traj.success, traj.length, traj.wall_time
    if name == "RRTStar":
        p = planners.PlannerParams(seed=args.seed, eta=2 * rho, delta_col=rho / 20.0)
        traj = planners.rrt_star_plan(start, goal, w, p, budget_nodes=args.rrt_star_nodes, rho=rho)
        return traj.success, traj.length, traj.wall_time
    if name in ("C2G", "C2G_Uniform"):
        model = models[name]
        traj = c2g_planner.plan(start, goal, w, model, cs=ControlSet(rho=rho))
        return traj.success, traj.length, traj.wall_time
    raise ValueError(f"unknown planner {name!r}")


def cmd_bench(args) -> int:
    names = [n.strip() for n in args.planners.split(",") if n.strip()]
    for n in names:
        if n not in PLANNER_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown planner {n!r}; choose from {', '.join(PLANNER_NAMES)}"
            )
    models = {}
    if "C2G" in names:
        if not args.model:
            raise argparse.ArgumentTypeError("--model required for the C2G planner")
        models["C2G"] = c2g_model.load_model(args.model)
    if "C2G_Uniform" in names:
        if not args.uniform_model:
            raise argparse.ArgumentTypeError("--uniform-model required for C2G_Uniform")
        models["C2G_Uniform"] = c2g_model.load_model(args.uniform_model)

    ws_dir = Path(args.workspaces)
    ws_files = sorted(ws_dir.glob("*.json"))
    if not ws_files:
        raise FileNotFoundError(f"no workspace JSON files in {ws_dir}")

    fp = Footprint()
    records = []
    for ws_file in ws_files:
        w = Workspace.load(ws_file)
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, len(records))))
        queries = _sample_queries(w, fp, args.queries, rng)
        for qi, (start, goal) in enumerate(queries):
            for name in names:
                success, length, wall = _run_planner(name, start, goal, w, args, models)
                records.append(
                    {
                        "planner": name,
                        "workspace": w.id,
                        "query": qi,
                        "success": success,
                        "length": length if success else "",
                        "wall_time": wall,
                    }
                )

    with open(args.out, "w", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=["planner", "workspace", "query", "success", "length", "wall_time"]
        )
        writer.writeheader()
        writer.writerows(records)

    # Aggregate: normalize by RS_Optimal in open space, RRTStar in clutter.
    any_obstacles = any(Workspace.load(f).obstacles for f in ws_files)
    baseline = "RRTStar" if any_obstacles else "RS_Optimal"
    by_planner: dict[str, list] = {n: [] for n in names}
    times: dict[str, list] = {n: [] for n in names}
    for r in records:
        if r["success"]:
            by_planner[r["planner"]].append(float(r["length"]))
        times[r["planner"]].append(r["wall_time"])
    base_mean = np.mean(by_planner[baseline]) if by_planner.get(baseline) else math.nan
    print(f"{'planner':<12} {'success':>8} {'mean_len':>10} {'norm_len':>9} {'median_s':>9}")
    for n in names:
        lens = by_planner[n]
        total = sum(1 for r in records if r["planner"] == n)
        succ = len(lens) / total if total else 0.0
        mean_len = np.mean(lens) if lens else math.nan
        norm = mean_len / base_mean if lens and math.isfinite(base_mean) else math.nan
        print(f"{n:<12} {succ:>8.2%} {mean_len:>10.1f} {norm:>9.3f} "
              f"{np.median(times[n]):>9.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="c2gplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-workspaces", help="write seeded random workspace JSON files")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--obstacles", type=int, default=5)
    p.add_argument("--extent", type=float, default=DEFAULT_EXTENT)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_workspaces)

    p = sub.add_parser("gen-dataset", help="build a cost-to-go dataset for one workspace")
    p.add_argument("--workspace", required=True)
    p.add_argument("--mode", choices=("uniform", "adaptive"), default="adaptive")
    p.add_argument("--rho", type=float, default=DEFAULT_RHO)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--target-size", type=int, default=20000)
    p.add_argument("--trees", type=int, default=4)
    p.add_argument("--nodes-per-tree", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="train the cost-to-go model on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="greedy cost-to-go planning with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--workspace", required=True)
    p.add_argument("--start", type=_parse_config, required=True)
    p.add_argument("--goal", type=_parse_config, required=True)
    p.add_argument("--svg")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run planners on a shared seeded query set")
    p.add_argument("--workspaces", required=True)
    p.add_argument("--queries", type=int, default=10)
    p.add_argument("--planners", default="RS_Optimal")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--rho", type=float, default=DEFAULT_RHO)
    p.add_argument("--model")
    p.add_argument("--uniform-model")
    p.add_argument("--rrt-iters", type=int, default=20000)
    p.add_argument("--rrt-star-nodes", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))  # exits with code 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
