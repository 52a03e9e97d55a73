"""Configuration-space primitives: poses, workspaces, obstacles, collision checks.

Everything here is pure and stateless; workspaces are immutable after
construction so they can be shared freely across planner runs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_EXTENT = 500.0
DEFAULT_RHO = 30.0


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    if not math.isfinite(theta):
        raise ValueError(f"non-finite angle: {theta!r}")
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped >= math.pi:  # remainder returns (-pi, pi]; we want [-pi, pi)
        wrapped -= 2.0 * math.pi
    return wrapped


def wrap_angle_array(theta: np.ndarray) -> np.ndarray:
    """Vectorized wrap into [-pi, pi)."""
    wrapped = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return wrapped


@dataclass(frozen=True)
class Configuration:
    """A car pose (x, y, heading); heading is stored wrapped to [-pi, pi)."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position: ({self.x!r}, {self.y!r})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    def position_distance(self, other: "Configuration") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class NormalizedConfig:
    """Network-ready pose: positions scaled to [0,1], heading as (cos, sin)."""

    xn: float
    yn: float
    cos_t: float
    sin_t: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xn, self.yn, self.cos_t, self.sin_t], dtype=float)


def normalize(c: Configuration, extent: float) -> NormalizedConfig:
    """Map a configuration inside [0, extent]^2 to normalized coordinates."""
    if not (0.0 <= c.x <= extent and 0.0 <= c.y <= extent):
        raise ValueError(f"configuration ({c.x}, {c.y}) outside extent [0, {extent}]")
    return NormalizedConfig(c.x / extent, c.y / extent, math.cos(c.theta), math.sin(c.theta))


def denormalize(n: NormalizedConfig, extent: float) -> Configuration:
    return Configuration(n.xn * extent, n.yn * extent, math.atan2(n.sin_t, n.cos_t))


def normalize_array(configs: np.ndarray, extent: float) -> np.ndarray:
    """(n, 3) poses -> (n, 4) normalized [xn, yn, cos, sin] without bounds checks."""
    configs = np.asarray(configs, dtype=float)
    out = np.empty((configs.shape[0], 4))
    out[:, 0] = configs[:, 0] / extent
    out[:, 1] = configs[:, 1] / extent
    out[:, 2] = np.cos(configs[:, 2])
    out[:, 3] = np.sin(configs[:, 2])
    return out


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disc radius must be positive")


@dataclass(frozen=True)
class Box:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("box must have positive area")

    @property
    def corners(self) -> np.ndarray:
        return np.array(
            [
                [self.xmin, self.ymin],
                [self.xmax, self.ymin],
                [self.xmax, self.ymax],
                [self.xmin, self.ymax],
            ]
        )


Obstacle = Disc | Box


@dataclass(frozen=True)
class Footprint:
    """Rectangular car body; the reference point sits rear_offset ahead of the
    rear edge, centered across the width."""

    length: float = 20.0
    width: float = 10.0
    rear_offset: float = 5.0

    def __post_init__(self):
        if self.length < 0 or self.width < 0:
            raise ValueError("footprint dimensions must be nonnegative")
        if not 0 <= self.rear_offset <= self.length:
            raise ValueError("rear_offset must lie within the footprint length")

    @property
    def is_point(self) -> bool:
        return self.length == 0 and self.width == 0

    def body_corners(self) -> np.ndarray:
        """Corners in the body frame, (4, 2)."""
        x0, x1 = -self.rear_offset, self.length - self.rear_offset
        y0, y1 = -self.width / 2.0, self.width / 2.0
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


POINT_FOOTPRINT = Footprint(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Workspace:
    """Square world [0, extent]^2 with a fixed obstacle list."""

    extent: float
    obstacles: tuple[Obstacle, ...] = ()
    id: str = "workspace"

    def __post_init__(self):
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    def to_json(self) -> str:
        obs = []
        for o in self.obstacles:
            if isinstance(o, Disc):
                obs.append({"kind": "disc", "cx": o.cx, "cy": o.cy, "r": o.radius})
            else:
                obs.append(
                    {"kind": "box", "xmin": o.xmin, "ymin": o.ymin, "xmax": o.xmax, "ymax": o.ymax}
                )
        return json.dumps({"id": self.id, "extent": self.extent, "obstacles": obs}, indent=2)

    @staticmethod
    def from_json(text: str) -> "Workspace":
        data = json.loads(text)
        obstacles: list[Obstacle] = []
        for o in data["obstacles"]:
            if o["kind"] == "disc":
                obstacles.append(Disc(o["cx"], o["cy"], o["r"]))
            elif o["kind"] == "box":
                obstacles.append(Box(o["xmin"], o["ymin"], o["xmax"], o["ymax"]))
            else:
                raise ValueError(f"unknown obstacle kind {o['kind']!r}")
        return Workspace(extent=data["extent"], obstacles=tuple(obstacles), id=data["id"])

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json() + "\n")

    @staticmethod
    def load(path) -> "Workspace":
        with open(path) as f:
            return Workspace.from_json(f.read())


def _rect_corners_world(configs: np.ndarray, fp: Footprint) -> np.ndarray:
    """World-frame footprint corners for (n, 3) poses, returned as (n, 4, 2)."""
    cos_t = np.cos(configs[:, 2])
    sin_t = np.sin(configs[:, 2])
    body = fp.body_corners()  # (4, 2)
    wx = configs[:, 0:1] + np.outer(cos_t, body[:, 0]) - np.outer(sin_t, body[:, 1])
    wy = configs[:, 1:2] + np.outer(sin_t, body[:, 0]) + np.outer(cos_t, body[:, 1])
    return np.stack([wx, wy], axis=2)


def _disc_hits(configs: np.ndarray, fp: Footprint, disc: Disc) -> np.ndarray:
    # Transform the disc center into the body frame, then use the exact
    # point-to-axis-aligned-rectangle distance.
    cos_t = np.cos(configs[:, 2])
    sin_t = np.sin(configs[:, 2])
    dx = disc.cx - configs[:, 0]
    dy = disc.cy - configs[:, 1]
    local_x = dx * cos_t + dy * sin_t
    local_y = -dx * sin_t + dy * cos_t
    x0, x1 = -fp.rear_offset, fp.length - fp.rear_offset
    y0, y1 = -fp.width / 2.0, fp.width / 2.0
    ex = np.clip(local_x, x0, x1) - local_x
    ey = np.clip(local_y, y0, y1) - local_y
    return ex * ex + ey * ey <= disc.radius * disc.radius


def _box_hits(corners: np.ndarray, configs: np.ndarray, box: Box) -> np.ndarray:
    # Separating-axis test between the oriented footprint rectangle and an
    # axis-aligned box: 2 world axes + 2 body axes.
    n = corners.shape[0]
    hit = np.ones(n, dtype=bool)

    # World axes: compare interval overlaps directly.
    rx_min = corners[:, :, 0].min(axis=1)
    rx_max = corners[:, :, 0].max(axis=1)
    ry_min = corners[:, :, 1].min(axis=1)
    ry_max = corners[:, :, 1].max(axis=1)
    hit &= (rx_max >= box.xmin) & (rx_min <= box.xmax)
    hit &= (ry_max >= box.ymin) & (ry_min <= box.ymax)

    # Body axes: project box corners onto the footprint's own axes.
    cos_t = np.cos(configs[:, 2])
    sin_t = np.sin(configs[:, 2])
    bc = box.corners  # (4, 2)
    for axis_x, axis_y, lo, hi in (
        (cos_t, sin_t, -np.inf, np.inf),
        (-sin_t, cos_t, -np.inf, np.inf),
    ):
        proj_box = np.outer(axis_x, bc[:, 0]) + np.outer(axis_y, bc[:, 1])  # (n, 4)
        proj_rect = corners[:, :, 0] * axis_x[:, None] + corners[:, :, 1] * axis_y[:, None]
        hit &= proj_box.max(axis=1) >= proj_rect.min(axis=1)
        hit &= proj_box.min(axis=1) <= proj_rect.max(axis=1)
    return hit


def collides_many(configs: np.ndarray, fp: Footprint, w: Workspace) -> np.ndarray:
    """Boolean collision mask for (n, 3) poses. Leaving the extent counts as a
    collision; obstacle tests are exact for discs and axis-aligned boxes."""
    configs = np.asarray(configs, dtype=float)
    if configs.ndim == 1:
        configs = configs[None, :]
    corners = _rect_corners_world(configs, fp)
    out = np.zeros(configs.shape[0], dtype=bool)
    out |= (corners[:, :, 0] < 0).any(axis=1) | (corners[:, :, 0] > w.extent).any(axis=1)
    out |= (corners[:, :, 1] < 0).any(axis=1) | (corners[:, :, 1] > w.extent).any(axis=1)
    for obs in w.obstacles:
        if isinstance(obs, Disc):
            out |= _disc_hits(configs, fp, obs)
        else:
            out |= _box_hits(corners, configs, obs)
    return out


def collides(c: Configuration, fp: Footprint, w: Workspace) -> bool:
    """True iff the footprint posed at c hits an obstacle or exits the extent."""
    return bool(collides_many(c.as_array()[None, :], fp, w)[0])


def path_collides(path_points, fp: Footprint, w: Workspace) -> bool:
    """Collision check over a sequence of poses (list of Configuration or (n,3) array)."""
    if isinstance(path_points, np.ndarray):
        pts = path_points
    else:
        pts = np.array([[p.x, p.y, p.theta] for p in path_points], dtype=float)
    if pts.size == 0:
        raise ValueError("path_collides needs at least one pose")
    return bool(collides_many(pts, fp, w).any())


def random_workspace(
    seed: int,
    n_obstacles: int,
    extent: float = DEFAULT_EXTENT,
    size_range: tuple[float, float] = (20.0, 60.0),
    corner_margin: float = 2.0 * DEFAULT_RHO,
    workspace_id: str | None = None,
) -> Workspace:
    """Seeded random workspace with discs and boxes.

    Obstacles keep a clear margin around the four extent corners so that
    seed/start configurations placed near corners stay feasible.
    """
    if n_obstacles < 0:
        raise ValueError("n_obstacles must be nonnegative")
    rng = np.random.default_rng(seed)
    corners = [(0.0, 0.0), (extent, 0.0), (0.0, extent), (extent, extent)]
    obstacles: list[Obstacle] = []
    attempts = 0
    while len(obstacles) < n_obstacles:
        attempts += 1
        if attempts > 1000 * max(n_obstacles, 1):
            raise RuntimeError("could not place obstacles with required corner margins")
        size = rng.uniform(*size_range)
        cx, cy = rng.uniform(0.0, extent, size=2)
        if rng.random() < 0.5:
            cand: Obstacle = Disc(cx, cy, size / 2.0)
            reach = size / 2.0

            def clear(px, py):
                return math.hypot(px - cx, py - cy) > corner_margin + reach
        else:
            w2, h2 = size / 2.0, rng.uniform(*size_range) / 2.0
            cand = Box(cx - w2, cy - h2, cx + w2, cy + h2)

            def clear(px, py, b=cand):
                ex = max(b.xmin - px, 0.0, px - b.xmax)
                ey = max(b.ymin - py, 0.0, py - b.ymax)
                return math.hypot(ex, ey) > corner_margin
        if all(clear(px, py) for px, py in corners):
            obstacles.append(cand)
    wid = workspace_id if workspace_id is not None else f"ws-{seed}-{n_obstacles}"
    return Workspace(extent=extent, obstacles=tuple(obstacles), id=wid)


def export_pointcloud(w: Workspace, path, spacing: float = 5.0) -> None:
    """Write boundary-sampled obstacle points as CSV columns x,y."""
    rows = []
    for obs in w.obstacles:
        if isinstance(obs, Disc):
            n = max(8, int(math.ceil(2 * math.pi * obs.radius / spacing)))
            for k in range(n):
                a = 2 * math.pi * k / n
                rows.append((obs.cx + obs.radius * math.cos(a), obs.cy + obs.radius * math.sin(a)))
        else:
            per = 2 * (obs.xmax - obs.xmin) + 2 * (obs.ymax - obs.ymin)
            n = max(8, int(math.ceil(per / spacing)))
            corners = obs.corners
            for k in range(n):
                t = per * k / n
                for i in range(4):
                    a, b = corners[i], corners[(i + 1) % 4]
                    side = math.hypot(b[0] - a[0], b[1] - a[1])
                    if t <= side:
                        f = t / side
                        rows.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
                        break
                    t -= side
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y"])
        writer.writerows(rows)
