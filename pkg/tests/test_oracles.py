import math

import pytest

from c2gplan.geometry import Configuration, Disc, Workspace
from c2gplan.reeds_shepp import rs_length
from conftest import random_configuration
from oracles import lattice_c2g, rs_brute


class TestRsBrute:
    def test_identity(self):
        a = Configuration(1, 2, 0.3)
        assert rs_brute(a, a, 1.0) == pytest.approx(0.0, abs=1e-9)

    def test_straight(self):
        assert rs_brute(Configuration(0, 0, 0), Configuration(4, 0, 0), 1.0) == pytest.approx(
            4.0, abs=1e-5
        )

    def test_half_turn(self):
        got = rs_brute(Configuration(0, 0, 0), Configuration(0, 2, math.pi), 1.0)
        assert got == pytest.approx(math.pi, abs=1e-6)

    def test_agreement_with_production(self, rng):
        # this is the oracle run for the production formulas
        for _ in range(30):
            s = random_configuration(rng)
            t = random_configuration(rng)
            assert rs_length(s, t, 1.0) == pytest.approx(rs_brute(s, t, 1.0), abs=1e-3)


class TestLatticeC2g:
    def test_goal_cell_zero(self):
        w = Workspace(extent=60.0, id="w")
        goal = Configuration(30, 30, 0)
        costs = lattice_c2g(goal, w, resolution=6.0, rho=8.0)
        goal_key = min(costs, key=lambda k: costs[k][0])
        assert costs[goal_key][0] == 0.0

    def test_open_space_upper_bounds_rs(self):
        w = Workspace(extent=60.0, id="w")
        rho = 8.0
        goal = Configuration(30, 30, 0)
        costs = lattice_c2g(goal, w, resolution=6.0, rho=rho)
        assert len(costs) > 50
        for cost, pose in costs.values():
            exact = rs_length(Configuration(*pose), goal, rho)
            assert cost >= exact - 1e-9

    def test_colliding_goal_rejected(self):
        w = Workspace(extent=60.0, obstacles=(Disc(30, 30, 5),), id="w")
        with pytest.raises(ValueError):
            lattice_c2g(Configuration(30, 30, 0), w, resolution=6.0, rho=8.0)

    def test_refinement_non_increasing(self):
        w = Workspace(extent=60.0, id="w")
        rho = 8.0
        goal = Configuration(30, 30, 0)
        coarse = lattice_c2g(goal, w, resolution=8.0, rho=rho)
        fine = lattice_c2g(goal, w, resolution=4.0, rho=rho)

        probes = [(10.0, 10.0), (50.0, 20.0), (20.0, 50.0)]

        def probe_cost(costs, px, py):
            best = math.inf
            for cost, pose in costs.values():
                if math.hypot(pose[0] - px, pose[1] - py) < 6.0:
                    best = min(best, cost)
            return best

        for px, py in probes:
            assert probe_cost(fine, px, py) <= probe_cost(coarse, px, py) + 1e-9

    def test_avoids_obstacles(self):
        w = Workspace(extent=60.0, obstacles=(Disc(30, 30, 10),), id="w")
        costs = lattice_c2g(Configuration(10, 30, 0), w, resolution=4.0, rho=8.0)
        for _, pose in costs.values():
            assert math.hypot(pose[0] - 30, pose[1] - 30) > 10.0
