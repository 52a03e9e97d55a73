import math

import numpy as np
import pytest

from c2gplan.c2g_planner import (
    StopCriteria,
    Trajectory,
    anti_cycle_guard,
    plan,
    trajectory_length,
)
from c2gplan.geometry import Configuration, Disc, Footprint, Workspace, collides_many
from c2gplan.kinematics import ControlInput, ControlSet, step
from c2gplan.reeds_shepp import rs_length, rs_length_many

RHO = 30.0


def oracle_model(poses, goal):
    """Exact obstacle-free cost-to-go; isolates planner quality from learning."""
    return rs_length_many(goal, np.asarray(poses), RHO)


@pytest.fixture(scope="module")
def empty():
    return Workspace(extent=500.0, id="empty")


class TestPlanOracle:
    def test_start_at_goal(self, empty):
        q = Configuration(250, 250, 0.5)
        traj = plan(q, q, empty, oracle_model, cs=ControlSet(rho=RHO))
        assert traj.success
        assert traj.controls == []
        assert traj.length == 0.0

    def test_straight_ahead_goal(self, empty):
        start = Configuration(100, 250, 0.0)
        goal = Configuration(400, 250, 0.0)
        traj = plan(start, goal, empty, oracle_model, cs=ControlSet(rho=RHO))
        assert traj.success
        assert traj.length <= 1.15 * rs_length(start, goal, RHO)

    def test_open_space_queries_near_optimal(self, empty, rng):
        ok = 0
        ratios = []
        for _ in range(30):
            s = Configuration(*rng.uniform(30, 470, 2), rng.uniform(-math.pi, math.pi))
            g = Configuration(*rng.uniform(30, 470, 2), rng.uniform(-math.pi, math.pi))
            traj = plan(s, g, empty, oracle_model, cs=ControlSet(rho=RHO))
            if traj.success:
                ok += 1
                ratios.append(traj.length / max(rs_length(s, g, RHO), 1e-9))
        assert ok >= 29
        assert float(np.mean(ratios)) <= 1.10

    def test_waypoints_satisfy_step_relation(self, empty):
        start = Configuration(100, 100, 0.4)
        goal = Configuration(350, 300, -1.0)
        traj = plan(start, goal, empty, oracle_model, cs=ControlSet(rho=RHO))
        q = traj.waypoints[0]
        for u, expect in zip(traj.controls, traj.waypoints[1:]):
            q = step(q, u)
            assert q.position_distance(expect) < 1e-9
            assert abs(q.theta - expect.theta) < 1e-9

    def test_curvature_bound(self, empty):
        start = Configuration(100, 100, 0.4)
        goal = Configuration(150, 120, 2.5)
        traj = plan(start, goal, empty, oracle_model, cs=ControlSet(rho=RHO))
        for u in traj.controls:
            assert abs(u.curvature) <= 1.0 / RHO + 1e-12

    def test_waypoints_collision_free(self):
        w = Workspace(500.0, (Disc(250, 250, 50),), "one")
        start = Configuration(100, 250, 0.0)
        goal = Configuration(400, 250, 0.0)
        traj = plan(start, goal, w, oracle_model, cs=ControlSet(rho=RHO))
        pts = np.array([[q.x, q.y, q.theta] for q in traj.waypoints])
        assert not collides_many(pts, Footprint(), w).any()

    def test_deterministic(self, empty):
        start = Configuration(60, 90, 1.0)
        goal = Configuration(420, 380, -2.0)
        a = plan(start, goal, empty, oracle_model, cs=ControlSet(rho=RHO))
        b = plan(start, goal, empty, oracle_model, cs=ControlSet(rho=RHO))
        assert [(q.x, q.y, q.theta) for q in a.waypoints] == [
            (q.x, q.y, q.theta) for q in b.waypoints
        ]

    def test_colliding_endpoints_rejected(self):
        w = Workspace(500.0, (Disc(100, 100, 30),), "d")
        with pytest.raises(ValueError):
            plan(Configuration(100, 100, 0), Configuration(400, 400, 0), w, oracle_model,
                 cs=ControlSet(rho=RHO))
        with pytest.raises(ValueError):
            plan(Configuration(400, 400, 0), Configuration(100, 100, 0), w, oracle_model,
                 cs=ControlSet(rho=RHO))

    def test_stall_flag_when_boxed_in(self):
        # start surrounded so that every control's step arc collides
        from c2gplan.geometry import Box

        w = Workspace(
            500.0,
            (Box(230, 230, 270, 244), Box(230, 256, 270, 270),
             Box(230, 244, 244, 256), Box(256, 244, 270, 256)),
            "boxed",
        )
        start = Configuration(250, 250, 0.0)
        assert not collides_many(start.as_array()[None, :], Footprint(2, 2, 1), w)[0]
        traj = plan(
            start, Configuration(400, 400, 0), w, oracle_model,
            cs=ControlSet(rho=RHO), footprint=Footprint(2, 2, 1), docking=False,
        )
        assert not traj.success
        assert traj.stalled

    def test_docking_disabled_still_reaches_by_stop_criteria(self, empty):
        start = Configuration(100, 250, 0.0)
        goal = Configuration(300, 250, 0.0)
        traj = plan(start, goal, empty, oracle_model, cs=ControlSet(rho=RHO), docking=False)
        assert traj.success
        assert traj.rs_arc_length == 0.0  # no docking arc appended


class TestAntiCycleGuard:
    def test_empty_history_permits(self):
        assert anti_cycle_guard([], Configuration(0, 0, 0), 6.0, 0.1)

    def test_exact_revisit_denied(self):
        h = [Configuration(10, 10, 0.5)]
        assert not anti_cycle_guard(h, Configuration(10, 10, 0.5), 6.0, 0.1)

    def test_nearby_same_heading_denied(self):
        h = [Configuration(10, 10, 0.5)]
        assert not anti_cycle_guard(h, Configuration(10.5, 10, 0.5), 6.0, 0.1)

    def test_nearby_different_heading_permitted(self):
        h = [Configuration(10, 10, 0.5)]
        assert anti_cycle_guard(h, Configuration(10.5, 10, 0.5 + 0.2), 6.0, 0.1)

    def test_window_limits_memory(self):
        old = Configuration(10, 10, 0.5)
        h = [old] + [Configuration(100 + i, 100, 0.0) for i in range(20)]
        assert anti_cycle_guard(h, old, 6.0, 0.1, window=20)

    def test_plateau_model_terminates(self, empty):
        """A constant-cost model induces dithering; the guard plus max_steps
        still terminates with a failed trajectory rather than hanging."""

        def plateau(poses, goal):
            return np.zeros(len(poses)) + 100.0

        sc = StopCriteria(eps_cost=1e-6, eps_pos=RHO / 5, eps_theta=0.1, max_steps=120)
        traj = plan(
            Configuration(250, 250, 0), Configuration(40, 40, 0), empty, plateau,
            cs=ControlSet(rho=RHO), sc=sc, docking=False,
        )
        assert not traj.success
        assert len(traj.controls) <= 120


class TestTrajectoryLength:
    def test_empty(self):
        assert trajectory_length(Trajectory()) == 0.0

    def test_straight_steps(self):
        controls = [ControlInput(1, 0.0, 7.5)] * 10
        t = Trajectory(controls=controls)
        assert trajectory_length(t) == pytest.approx(75.0)

    def test_matches_polyline_within_chord_error(self, empty, rng):
        cs = ControlSet(rho=RHO)
        for _ in range(20):
            s = Configuration(*rng.uniform(60, 440, 2), rng.uniform(-math.pi, math.pi))
            g = Configuration(*rng.uniform(60, 440, 2), rng.uniform(-math.pi, math.pi))
            traj = plan(s, g, empty, oracle_model, cs=cs, docking=False)
            if not traj.controls:
                continue
            poly = sum(
                p.position_distance(q) for p, q in zip(traj.waypoints, traj.waypoints[1:])
            )
            per_step = cs.step_len**2 / RHO
            assert abs(trajectory_length(traj) - poly) <= per_step * len(traj.controls) + 1e-9

    def test_length_field_consistent(self, empty):
        traj = plan(
            Configuration(100, 100, 0), Configuration(400, 350, 1.0), empty, oracle_model,
            cs=ControlSet(rho=RHO),
        )
        assert traj.length == pytest.approx(trajectory_length(traj), abs=1e-12)
