"""Vehicle control model and exact forward kinematics.

Steps integrate the bicycle-at-fixed-curvature motion exactly (arc or
segment), so the non-holonomic constraint holds by construction and steps are
exactly reversible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Configuration, wrap_angle_array


@dataclass(frozen=True)
class ControlInput:
    """gear: +1 forward / -1 backward; curvature in [-1/rho, 1/rho]; step_len > 0."""

    gear: int
    curvature: float
    step_len: float

    def __post_init__(self):
        if self.gear not in (1, -1):
            raise ValueError("gear must be +1 or -1")
        if self.step_len <= 0:
            raise ValueError("step_len must be positive")


@dataclass(frozen=True)
class ControlSet:
    """Fixed enumeration of gear x curvature controls used by greedy planning.

    Curvatures are n_steer evenly spaced values over [-1/rho, 1/rho]; n_steer
    must be odd so straight-ahead (zero curvature) is included.
    """

    rho: float
    n_steer: int = 11
    step_len: float | None = None

    def __post_init__(self):
        if self.n_steer < 3 or self.n_steer % 2 == 0:
            raise ValueError("n_steer must be odd and >= 3")
        if self.step_len is None:
            object.__setattr__(self, "step_len", self.rho / 4.0)
        if self.step_len <= 0 or self.rho <= 0:
            raise ValueError("step_len and rho must be positive")

    def controls(self) -> tuple[ControlInput, ...]:
        curvatures = np.linspace(-1.0 / self.rho, 1.0 / self.rho, self.n_steer)
        return tuple(
            ControlInput(gear, float(k), self.step_len)
            for gear in (1, -1)
            for k in curvatures
        )


def step(q: Configuration, u: ControlInput) -> Configuration:
    """Exact successor pose under one control."""
    s = u.gear * u.step_len
    if u.curvature == 0.0:
        return Configuration(
            q.x + s * math.cos(q.theta), q.y + s * math.sin(q.theta), q.theta
        )
    theta_new = q.theta + u.curvature * s
    x = q.x + (math.sin(theta_new) - math.sin(q.theta)) / u.curvature
    y = q.y - (math.cos(theta_new) - math.cos(q.theta)) / u.curvature
    return Configuration(x, y, theta_new)


def rollout(q: Configuration, controls) -> list[Configuration]:
    """One successor per control, in the control set's enumeration order."""
    if isinstance(controls, ControlSet):
        controls = controls.controls()
    if not controls:
        raise ValueError("rollout needs a nonempty control set")
    return [step(q, u) for u in controls]


def rollout_array(q: Configuration, controls) -> np.ndarray:
    """Vectorized rollout: (n, 3) successor poses."""
    if isinstance(controls, ControlSet):
        controls = controls.controls()
    gear = np.array([u.gear for u in controls], dtype=float)
    kappa = np.array([u.curvature for u in controls], dtype=float)
    slen = np.array([u.step_len for u in controls], dtype=float)
    s = gear * slen
    out = np.empty((len(controls), 3))
    straight = kappa == 0.0
    theta_new = q.theta + kappa * s
    with np.errstate(divide="ignore", invalid="ignore"):
        out[:, 0] = q.x + (np.sin(theta_new) - math.sin(q.theta)) / kappa
        out[:, 1] = q.y - (np.cos(theta_new) - math.cos(q.theta)) / kappa
    out[straight, 0] = q.x + s[straight] * math.cos(q.theta)
    out[straight, 1] = q.y + s[straight] * math.sin(q.theta)
    out[:, 2] = wrap_angle_array(theta_new)
    return out


def constraint_residual(q_prev: Configuration, q_next: Configuration) -> float:
    """Lateral-slip magnitude of a step: |dx sin(mid) - dy cos(mid)| with the
    chord-mean heading. Zero for exact arc/straight steps."""
    dx = q_next.x - q_prev.x
    dy = q_next.y - q_prev.y
    theta_mid = q_prev.theta + 0.5 * math.remainder(q_next.theta - q_prev.theta, 2.0 * math.pi)
    return abs(dx * math.sin(theta_mid) - dy * math.cos(theta_mid))
