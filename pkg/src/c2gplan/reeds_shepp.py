"""Closed-form shortest Reeds-Shepp curves: length, structure, interpolation.

The solver enumerates the canonical word taxonomy (CSC, CCC, CCCC, CCSC and
CCSCC shapes with both driving gears, 48 words as 12 base forms x 4
symmetry transforms) and returns the minimum-length candidate. Formulas follow
the standard corrected equation set for the base forms; the remaining words
come from the timeflip (gear reversal) and reflect (left/right mirror)
transforms. Ties break toward the lowest word index, so results are
deterministic.

All solvers are vectorized over numpy arrays; scalar queries run through the
same code with length-1 arrays, so batched and scalar results always agree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Configuration, wrap_angle

_HPI = math.pi / 2.0


class Steer(enum.IntEnum):
    LEFT = 1
    STRAIGHT = 0
    RIGHT = -1


class Gear(enum.IntEnum):
    FORWARD = 1
    BACKWARD = -1


@dataclass(frozen=True)
class RSSegment:
    """One primitive: param is the arc angle for turns, length/rho for straights."""

    steer: Steer
    gear: Gear
    param: float

    def __post_init__(self):
        if self.param < 0:
            raise ValueError("segment param must be nonnegative")

    @property
    def signed(self) -> float:
        return self.param if self.gear is Gear.FORWARD else -self.param


@dataclass(frozen=True)
class RSPath:
    segments: tuple[RSSegment, ...]
    rho: float
    total_length: float

    def to_json(self) -> list[dict]:
        return [
            {"steer": seg.steer.name, "gear": seg.gear.name, "param": seg.param}
            for seg in self.segments
        ]


def _make_path(segments, rho: float) -> RSPath:
    segs = tuple(s for s in segments if s.param > 1e-12)
    total = rho * math.fsum(s.param for s in segs)
    return RSPath(segs, rho, total)


def _polar(x, y):
    return np.hypot(x, y), np.arctan2(y, x)


def _wrap(a):
    return np.remainder(a + np.pi, 2.0 * np.pi) - np.pi


# --- base word solvers -------------------------------------------------------
# Each returns signed magnitudes (t, u, v) plus a validity mask; invalid
# entries may contain NaN and are ignored through the mask.


def _lsl(x, y, phi):
    u, t = _polar(x - np.sin(phi), y - 1.0 + np.cos(phi))
    v = _wrap(phi - t)
    return t, u, v, np.ones_like(u, dtype=bool)


def _lsr(x, y, phi):
    r, t1 = _polar(x + np.sin(phi), y - 1.0 - np.cos(phi))
    valid = r * r >= 4.0
    with np.errstate(invalid="ignore"):
        u = np.sqrt(r * r - 4.0)
        t = _wrap(t1 + np.arctan2(2.0, u))
        v = _wrap(t - phi)
    return t, u, v, valid


def _lrl_a(x, y, phi):
    r, theta = _polar(x - np.sin(phi), y - 1.0 + np.cos(phi))
    valid = r <= 4.0
    with np.errstate(invalid="ignore"):
        a = np.arccos(np.clip(r / 4.0, -1.0, 1.0))
        t = _wrap(theta + _HPI + a)
        u = _wrap(np.pi - 2.0 * a)
        v = _wrap(phi - t - u)
    return t, u, v, valid


def _lrl_b(x, y, phi):
    r, theta = _polar(x - np.sin(phi), y - 1.0 + np.cos(phi))
    valid = r <= 4.0
    with np.errstate(invalid="ignore"):
        a = np.arccos(np.clip(r / 4.0, -1.0, 1.0))
        t = _wrap(theta + _HPI + a)
        u = _wrap(np.pi - 2.0 * a)
        v = _wrap(t + u - phi)
    return t, u, v, valid


def _lrl_c(x, y, phi):
    r, theta = _polar(x - np.sin(phi), y - 1.0 + np.cos(phi))
    valid = r <= 4.0
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.arccos(np.clip(1.0 - r * r / 8.0, -1.0, 1.0))
        a = np.arcsin(np.clip(2.0 * np.sin(u) / np.where(r == 0, np.inf, r), -1.0, 1.0))
        t = _wrap(theta + _HPI - a)
        v = _wrap(t - u - phi)
    return t, u, v, valid & (r > 0)


def _lrlr_n(x, y, phi):
    r, theta = _polar(x + np.sin(phi), y - 1.0 - np.cos(phi))
    valid = r <= 4.0
    with np.errstate(invalid="ignore"):
        low = r <= 2.0
        a_lo = np.arccos(np.clip((r + 2.0) / 4.0, -1.0, 1.0))
        a_hi = np.arccos(np.clip((r - 2.0) / 4.0, -1.0, 1.0))
        t = np.where(low, _wrap(theta + _HPI + a_lo), _wrap(theta + _HPI - a_hi))
        u = np.where(low, _wrap(a_lo), _wrap(np.pi - a_hi))
        v = _wrap(phi - t + 2.0 * u)
    return t, u, v, valid


def _lrlr_p(x, y, phi):
    r, theta = _polar(x + np.sin(phi), y - 1.0 - np.cos(phi))
    u1 = (20.0 - r * r) / 16.0
    valid = (r <= 6.0) & (u1 >= 0.0) & (u1 <= 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.arccos(np.clip(u1, -1.0, 1.0))
        a = np.arcsin(np.clip(2.0 * np.sin(u) / np.where(r == 0, np.inf, r), -1.0, 1.0))
        t = _wrap(theta + _HPI + a)
        v = _wrap(t - phi)
    return t, u, v, valid & (r > 0)


def _lrsl(x, y, phi):
    r, theta = _polar(x - np.sin(phi), y - 1.0 + np.cos(phi))
    valid = r >= 2.0
    with np.errstate(invalid="ignore"):
        u = np.sqrt(np.maximum(r * r - 4.0, 0.0)) - 2.0
        a = np.arctan2(2.0, u + 2.0)
        t = _wrap(theta + _HPI + a)
        v = _wrap(t - phi + _HPI)
    return t, u, v, valid & (u >= 0.0)


def _lsrl(x, y, phi):
    r, theta = _polar(x - np.sin(phi), y - 1.0 + np.cos(phi))
    valid = r >= 2.0
    with np.errstate(invalid="ignore"):
        u = np.sqrt(np.maximum(r * r - 4.0, 0.0)) - 2.0
        a = np.arctan2(u + 2.0, 2.0)
        t = _wrap(theta + _HPI - a)
        v = _wrap(t - phi - _HPI)
    return t, u, v, valid & (u >= 0.0)


def _lrsr(x, y, phi):
    r, theta = _polar(x + np.sin(phi), y - 1.0 - np.cos(phi))
    valid = r >= 2.0
    t = _wrap(theta + _HPI)
    u = r - 2.0
    v = _wrap(phi - t - _HPI)
    return t, u, v, valid


def _lslr(x, y, phi):
    r, theta = _polar(x + np.sin(phi), y - 1.0 - np.cos(phi))
    valid = r >= 2.0
    t = _wrap(theta)
    u = r - 2.0
    v = _wrap(phi - t - _HPI)
    return t, u, v, valid


def _lrslr(x, y, phi):
    r, theta = _polar(x + np.sin(phi), y - 1.0 - np.cos(phi))
    valid = r >= 4.0
    with np.errstate(invalid="ignore"):
        u = np.sqrt(np.maximum(r * r - 4.0, 0.0)) - 4.0
        a = np.arctan2(2.0, u + 4.0)
        t = _wrap(theta + _HPI + a)
        v = _wrap(t - phi)
    return t, u, v, valid & (u >= 0.0)


_L, _S, _R = Steer.LEFT, Steer.STRAIGHT, Steer.RIGHT

# (solver, steer sequence, per-segment param spec). A spec entry is either
# ("t"|"u"|"v", sign) for a solved magnitude or ("c", signed constant) for a
# fixed quarter turn. Order fixes the deterministic tie-break.
_WORDS = [
    (_lsl, (_L, _S, _L), (("t", 1), ("u", 1), ("v", 1))),
    (_lsr, (_L, _S, _R), (("t", 1), ("u", 1), ("v", 1))),
    (_lrl_a, (_L, _R, _L), (("t", 1), ("u", -1), ("v", 1))),
    (_lrl_b, (_L, _R, _L), (("t", 1), ("u", -1), ("v", -1))),
    (_lrl_c, (_L, _R, _L), (("t", 1), ("u", 1), ("v", -1))),
    (_lrlr_n, (_L, _R, _L, _R), (("t", 1), ("u", 1), ("u", -1), ("v", -1))),
    (_lrlr_p, (_L, _R, _L, _R), (("t", 1), ("u", -1), ("u", -1), ("v", 1))),
    (_lrsl, (_L, _R, _S, _L), (("t", 1), ("c", -_HPI), ("u", -1), ("v", -1))),
    (_lsrl, (_L, _S, _R, _L), (("t", 1), ("u", 1), ("c", _HPI), ("v", -1))),
    (_lrsr, (_L, _R, _S, _R), (("t", 1), ("c", -_HPI), ("u", -1), ("v", -1))),
    (_lslr, (_L, _S, _L, _R), (("t", 1), ("u", 1), ("c", _HPI), ("v", -1))),
    (_lrslr, (_L, _R, _S, _L, _R), (("t", 1), ("c", -_HPI), ("u", -1), ("c", -_HPI), ("v", 1))),
]


def _word_weights(spec):
    w = {"t": 0.0, "u": 0.0, "v": 0.0}
    const = 0.0
    for key, mult in spec:
        if key == "c":
            const += abs(mult)
        else:
            w[key] += 1.0
    return w["t"], w["u"], w["v"], const


_WEIGHTS = [_word_weights(spec) for _, _, spec in _WORDS]

# Input transforms paired with how the resulting signed params map back:
# timeflip negates every signed param, reflect mirrors every steer.
_VARIANTS = ((1.0, 1.0, 1.0), (-1.0, 1.0, -1.0), (1.0, -1.0, -1.0), (-1.0, -1.0, 1.0))


def _canonicalize(s: Configuration, targets: np.ndarray, rho: float):
    targets = np.asarray(targets, dtype=float)
    dx = targets[:, 0] - s.x
    dy = targets[:, 1] - s.y
    c, sn = math.cos(s.theta), math.sin(s.theta)
    x = (c * dx + sn * dy) / rho
    y = (-sn * dx + c * dy) / rho
    phi = _wrap(targets[:, 2] - s.theta)
    return x, y, phi


def _solve_all(x, y, phi, want_params: bool):
    """Lengths (n, 48) and signed magnitudes (n, 48, 3) over all words.

    The four symmetry variants are stacked into one array per solver call to
    keep numpy overhead low on small batches.
    """
    n = x.shape[0]
    xs = np.concatenate([x, -x, x, -x])
    ys = np.concatenate([y, y, -y, -y])
    ps = np.concatenate([phi, -phi, -phi, phi])
    lengths = np.empty((n, len(_WORDS) * 4))
    params = np.empty((n, len(_WORDS) * 4, 3)) if want_params else None
    for wi, (solver, _, _) in enumerate(_WORDS):
        wt, wu, wv, const = _WEIGHTS[wi]
        t, u, v, valid = solver(xs, ys, ps)
        length = wt * np.abs(t) + wu * np.abs(u) + wv * np.abs(v) + const
        good = valid & np.isfinite(length)
        cols = slice(wi * 4, wi * 4 + 4)
        lengths[:, cols] = np.where(good, length, np.inf).reshape(4, n).T
        if want_params:
            params[:, cols, 0] = np.where(good, t, 0.0).reshape(4, n).T
            params[:, cols, 1] = np.where(good, u, 0.0).reshape(4, n).T
            params[:, cols, 2] = np.where(good, v, 0.0).reshape(4, n).T
    return lengths, params


def rs_length_many(s: Configuration, targets: np.ndarray, rho: float) -> np.ndarray:
    """Shortest Reeds-Shepp lengths from s to each row of an (n, 3) pose array."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    x, y, phi = _canonicalize(s, np.asarray(targets, dtype=float), rho)
    lengths, _ = _solve_all(x, y, phi, want_params=False)
    return lengths.min(axis=1) * rho


def rs_solve_many(s: Configuration, targets: np.ndarray, rho: float):
    """Winning word per target: (lengths (n,), word indices (n,), params (n, 3)).

    Paths are materialized lazily via rs_path_from_solution, which lets
    callers that only need a few of the n paths skip the rest.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    x, y, phi = _canonicalize(s, np.asarray(targets, dtype=float), rho)
    lengths, params = _solve_all(x, y, phi, want_params=True)
    winners = np.argmin(lengths, axis=1)
    rows = np.arange(lengths.shape[0])
    return lengths[rows, winners] * rho, winners, params[rows, winners]


def rs_path_from_solution(word_index: int, tuv, rho: float) -> RSPath:
    return _build_path(int(word_index), tuv, rho)


def rs_length(s: Configuration, t: Configuration, rho: float) -> float:
    return float(rs_length_many(s, t.as_array()[None, :], rho)[0])


def _build_path(word_index: int, tuv, rho: float) -> RSPath:
    wi, vi = divmod(word_index, 4)
    _, steers, spec = _WORDS[wi]
    # x-flipped inputs solve the gear-reversed word; y-flipped the mirrored one.
    flip_param, flip_steer, _ = _VARIANTS[vi]
    vals = {"t": tuv[0], "u": tuv[1], "v": tuv[2]}
    segs = []
    for steer, (key, mult) in zip(steers, spec):
        signed = mult if key == "c" else vals[key] * mult
        signed *= flip_param
        if flip_steer < 0 and steer is not _S:
            steer = _L if steer is _R else _R
        gear = Gear.FORWARD if signed >= 0 else Gear.BACKWARD
        segs.append(RSSegment(steer, gear, float(abs(signed))))
    return _make_path(segs, rho)


def rs_shortest_many(s: Configuration, targets: np.ndarray, rho: float) -> list[RSPath]:
    """Shortest paths from s to each target pose; tie-break by word order."""
    _, winners, params = rs_solve_many(s, targets, rho)
    return [_build_path(int(w), params[i], rho) for i, w in enumerate(winners)]


def rs_shortest(s: Configuration, t: Configuration, rho: float) -> RSPath:
    path = rs_shortest_many(s, t.as_array()[None, :], rho)[0]
    end = rs_interpolate(path, path.total_length, s)
    err = math.hypot(end.x - t.x, end.y - t.y) + abs(wrap_angle(end.theta - t.theta))
    assert err < 1e-6 * max(1.0, rho), f"word reconstruction error {err}"
    return path


def _advance(x, y, th, steer, signed_param, rho):
    if steer is _S:
        d = signed_param * rho
        return x + d * math.cos(th), y + d * math.sin(th), th
    th_new = th + steer * signed_param
    x += steer * rho * (math.sin(th_new) - math.sin(th))
    y += steer * rho * (math.cos(th) - math.cos(th_new))
    return x, y, th_new


def rs_interpolate(p: RSPath, s_arc: float, start: Configuration) -> Configuration:
    """Exact pose at arc length s_arc along the path posed at start."""
    if not -1e-9 <= s_arc <= p.total_length + 1e-9:
        raise ValueError(f"arc length {s_arc} outside [0, {p.total_length}]")
    remaining = min(max(s_arc, 0.0), p.total_length)
    x, y, th = start.x, start.y, start.theta
    for seg in p.segments:
        seg_len = seg.param * p.rho
        take = min(remaining, seg_len)
        x, y, th = _advance(x, y, th, seg.steer, seg.gear * (take / p.rho), p.rho)
        remaining -= take
        if remaining <= 1e-15:
            break
    return Configuration(x, y, th)


def rs_sample(p: RSPath, start: Configuration, spacing: float) -> np.ndarray:
    """Poses along the path at arc spacing <= spacing, endpoints included, (n, 3)."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if p.total_length == 0 or not p.segments:
        return np.array([[start.x, start.y, start.theta]])
    n = max(2, int(math.ceil(p.total_length / spacing)) + 1)
    arcs = np.linspace(0.0, p.total_length, n)

    # Segment boundary poses, computed once, then vectorized within segments.
    bounds = [0.0]
    poses = [(start.x, start.y, start.theta)]
    for seg in p.segments:
        x, y, th = _advance(*poses[-1], seg.steer, seg.gear * seg.param, p.rho)
        poses.append((x, y, th))
        bounds.append(bounds[-1] + seg.param * p.rho)
    bounds_arr = np.array(bounds)
    seg_idx = np.clip(np.searchsorted(bounds_arr, arcs, side="right") - 1, 0, len(p.segments) - 1)

    out = np.empty((n, 3))
    for i, seg in enumerate(p.segments):
        mask = seg_idx == i
        if not mask.any():
            continue
        local = (arcs[mask] - bounds_arr[i]) / p.rho * int(seg.gear)
        x0, y0, th0 = poses[i]
        if seg.steer is _S:
            out[mask, 0] = x0 + local * p.rho * math.cos(th0)
            out[mask, 1] = y0 + local * p.rho * math.sin(th0)
            out[mask, 2] = th0
        else:
            sigma = float(seg.steer)
            th_new = th0 + sigma * local
            out[mask, 0] = x0 + sigma * p.rho * (np.sin(th_new) - math.sin(th0))
            out[mask, 1] = y0 + sigma * p.rho * (math.cos(th0) - np.cos(th_new))
            out[mask, 2] = th_new
    out[:, 2] = np.remainder(out[:, 2] + np.pi, 2 * np.pi) - np.pi
    return out


def rs_reverse(p: RSPath) -> RSPath:
    """The same curve driven from the other end: segments reversed, gears flipped.

    Traces the identical geometry, so lengths and collision status carry over.
    """
    segs = tuple(
        RSSegment(s.steer, Gear.BACKWARD if s.gear is Gear.FORWARD else Gear.FORWARD, s.param)
        for s in reversed(p.segments)
    )
    return RSPath(segs, p.rho, p.total_length)


def rs_truncate(p: RSPath, max_len: float) -> RSPath:
    """Prefix of p with total length min(total_length, max_len)."""
    if max_len <= 0:
        raise ValueError("max_len must be positive")
    if max_len >= p.total_length:
        return p
    remaining = max_len
    segs = []
    for seg in p.segments:
        seg_len = seg.param * p.rho
        if seg_len <= remaining:
            segs.append(seg)
            remaining -= seg_len
        else:
            segs.append(RSSegment(seg.steer, seg.gear, remaining / p.rho))
            break
    return _make_path(segs, p.rho)
