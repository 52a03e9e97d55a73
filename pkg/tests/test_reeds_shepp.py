import math

import numpy as np
import pytest

from c2gplan.geometry import Configuration, wrap_angle
from c2gplan.reeds_shepp import (
    Gear,
    RSSegment,
    Steer,
    rs_interpolate,
    rs_length,
    rs_length_many,
    rs_reverse,
    rs_sample,
    rs_shortest,
    rs_shortest_many,
    rs_truncate,
)
from conftest import random_configuration


def _random_pair(rng, lo=-5.0, hi=5.0):
    return random_configuration(rng, lo, hi), random_configuration(rng, lo, hi)


class TestShortest:
    def test_identity(self):
        p = rs_shortest(Configuration(1, 2, 0.5), Configuration(1, 2, 0.5), 1.0)
        assert p.total_length == 0.0
        assert p.segments == ()

    def test_straight_ahead(self):
        p = rs_shortest(Configuration(0, 0, 0), Configuration(5, 0, 0), 1.0)
        assert p.total_length == pytest.approx(5.0)
        assert len(p.segments) == 1
        seg = p.segments[0]
        assert seg.steer is Steer.STRAIGHT and seg.gear is Gear.FORWARD
        assert seg.param == pytest.approx(5.0)

    def test_straight_back(self):
        p = rs_shortest(Configuration(0, 0, 0), Configuration(-3, 0, 0), 1.0)
        assert p.total_length == pytest.approx(3.0)
        assert p.segments[0].gear is Gear.BACKWARD

    def test_at_most_five_segments(self, rng):
        for _ in range(500):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            assert len(p.segments) <= 5
            for seg in p.segments:
                assert seg.param >= 0
                if seg.steer is not Steer.STRAIGHT:
                    assert seg.param <= 2 * math.pi + 1e-12

    def test_endpoint_reconstruction(self, rng):
        worst = 0.0
        for _ in range(1000):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            end = rs_interpolate(p, p.total_length, s)
            err = math.hypot(end.x - t.x, end.y - t.y) + abs(wrap_angle(end.theta - t.theta))
            worst = max(worst, err)
        assert worst < 1e-6

    def test_total_length_consistency(self, rng):
        for _ in range(200):
            s, t = _random_pair(rng)
            rho = float(rng.uniform(0.5, 3.0))
            p = rs_shortest(s, t, rho)
            assert p.total_length == pytest.approx(
                rho * sum(seg.param for seg in p.segments), abs=1e-9
            )

    def test_batch_matches_scalar(self, rng):
        s = random_configuration(rng)
        targets = np.column_stack(
            [rng.uniform(-5, 5, 200), rng.uniform(-5, 5, 200), rng.uniform(-math.pi, math.pi, 200)]
        )
        batch = rs_length_many(s, targets, 1.0)
        for i in range(0, 200, 7):
            assert batch[i] == rs_length(s, Configuration(*targets[i]), 1.0)
        paths = rs_shortest_many(s, targets, 1.0)
        np.testing.assert_allclose([p.total_length for p in paths], batch, atol=1e-12)


class TestLength:
    def test_zero_and_straight(self):
        a = Configuration(2, 3, 1.0)
        assert rs_length(a, a, 2.0) == 0.0
        assert rs_length(Configuration(0, 0, 0), Configuration(10, 0, 0), 1.0) == pytest.approx(10.0)

    def test_euclidean_lower_bound(self, rng):
        for _ in range(1000):
            s, t = _random_pair(rng)
            assert rs_length(s, t, 1.0) >= s.position_distance(t) - 1e-9


class TestMetricProperties:
    N = 1000

    def test_symmetry(self, rng):
        for _ in range(self.N):
            s, t = _random_pair(rng)
            assert abs(rs_length(s, t, 1.0) - rs_length(t, s, 1.0)) < 1e-9

    def test_mirror_symmetry(self, rng):
        for _ in range(self.N):
            s, t = _random_pair(rng)
            sm = Configuration(s.x, -s.y, -s.theta)
            tm = Configuration(t.x, -t.y, -t.theta)
            assert abs(rs_length(s, t, 1.0) - rs_length(sm, tm, 1.0)) < 1e-9

    def test_rigid_invariance(self, rng):
        for _ in range(self.N):
            s, t = _random_pair(rng)
            dx, dy = rng.uniform(-10, 10, 2)
            a = rng.uniform(-math.pi, math.pi)
            c, sn = math.cos(a), math.sin(a)

            def move(q):
                return Configuration(
                    c * q.x - sn * q.y + dx, sn * q.x + c * q.y + dy, q.theta + a
                )

            assert abs(rs_length(s, t, 1.0) - rs_length(move(s), move(t), 1.0)) < 1e-9

    def test_scale_covariance(self, rng):
        for _ in range(self.N):
            s, t = _random_pair(rng)
            k = float(rng.uniform(0.2, 5.0))
            sk = Configuration(k * s.x, k * s.y, s.theta)
            tk = Configuration(k * t.x, k * t.y, t.theta)
            assert rs_length(sk, tk, k) == pytest.approx(k * rs_length(s, t, 1.0), abs=1e-9)

    def test_triangle_inequality(self, rng):
        for _ in range(self.N):
            a = random_configuration(rng)
            b = random_configuration(rng)
            c = random_configuration(rng)
            ab = rs_length(a, b, 1.0)
            bc = rs_length(b, c, 1.0)
            ac = rs_length(a, c, 1.0)
            assert ac <= ab + bc + 1e-9

    def test_curvature_bound_along_paths(self, rng):
        for _ in range(50):
            s, t = _random_pair(rng)
            rho = 1.0
            p = rs_shortest(s, t, rho)
            if p.total_length < 1e-6:
                continue
            pts = rs_sample(p, s, 0.02)
            dth = np.abs(np.remainder(np.diff(pts[:, 2]) + np.pi, 2 * np.pi) - np.pi)
            darc = p.total_length / (len(pts) - 1)
            assert (dth / darc <= 1.0 / rho + 1e-6).all()


class TestOracleAgreement:
    def test_100_random_pairs(self, rng):
        from oracles import rs_brute

        for _ in range(100):
            s, t = _random_pair(rng)
            prod = rs_length(s, t, 1.0)
            assert prod == pytest.approx(rs_brute(s, t, 1.0), abs=1e-4)


class TestInterpolate:
    def test_endpoints(self, rng):
        for _ in range(100):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            q0 = rs_interpolate(p, 0.0, s)
            assert (q0.x, q0.y, q0.theta) == (s.x, s.y, s.theta)

    def test_straight_midpoint(self):
        s = Configuration(0, 0, 0)
        p = rs_shortest(s, Configuration(8, 0, 0), 1.0)
        mid = rs_interpolate(p, 4.0, s)
        assert (mid.x, mid.y, mid.theta) == pytest.approx((4.0, 0.0, 0.0))

    def test_out_of_range_rejected(self):
        s = Configuration(0, 0, 0)
        p = rs_shortest(s, Configuration(5, 0, 0), 1.0)
        with pytest.raises(ValueError):
            rs_interpolate(p, -0.1, s)
        with pytest.raises(ValueError):
            rs_interpolate(p, 5.2, s)

    def test_sample_spacing_and_ends(self, rng):
        for _ in range(50):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            if p.total_length == 0:
                continue
            pts = rs_sample(p, s, 0.05)
            assert np.allclose(pts[0], [s.x, s.y, s.theta])
            assert math.hypot(pts[-1, 0] - t.x, pts[-1, 1] - t.y) < 1e-6
            gaps = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
            assert (gaps <= 0.05 + 1e-9).all()  # chord <= arc spacing


class TestTruncate:
    def test_no_op_when_long_enough(self, rng):
        s, t = _random_pair(rng)
        p = rs_shortest(s, t, 1.0)
        assert rs_truncate(p, p.total_length + 1.0) is p

    def test_exact_lengths(self, rng):
        for _ in range(100):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            if p.total_length < 0.2:
                continue
            cut = float(rng.uniform(0.1, p.total_length))
            tp = rs_truncate(p, cut)
            assert tp.total_length == pytest.approx(cut, abs=1e-9)

    def test_endpoint_on_original(self, rng):
        for _ in range(100):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            if p.total_length < 0.2:
                continue
            cut = 0.5 * p.total_length
            tp = rs_truncate(p, cut)
            on_orig = rs_interpolate(p, cut, s)
            end = rs_interpolate(tp, tp.total_length, s)
            assert math.hypot(end.x - on_orig.x, end.y - on_orig.y) < 1e-9
            assert abs(wrap_angle(end.theta - on_orig.theta)) < 1e-9

    def test_structure_preserved(self, rng):
        s, t = Configuration(0, 0, 0), Configuration(9, 0, 0)
        p = rs_shortest(s, t, 1.0)
        tp = rs_truncate(p, 4.0)
        assert [seg.steer for seg in tp.segments] == [seg.steer for seg in p.segments][: len(tp.segments)]


class TestReverse:
    def test_retraces_geometry(self, rng):
        for _ in range(100):
            s, t = _random_pair(rng)
            p = rs_shortest(s, t, 1.0)
            r = rs_reverse(p)
            assert r.total_length == p.total_length
            back = rs_interpolate(r, r.total_length, t)
            assert math.hypot(back.x - s.x, back.y - s.y) < 1e-6
            assert abs(wrap_angle(back.theta - s.theta)) < 1e-6


class TestSegment:
    def test_negative_param_rejected(self):
        with pytest.raises(ValueError):
            RSSegment(Steer.LEFT, Gear.FORWARD, -0.1)

    def test_json_dump(self):
        p = rs_shortest(Configuration(0, 0, 0), Configuration(3, 1, 0.5), 1.0)
        dump = p.to_json()
        assert all(set(d) == {"steer", "gear", "param"} for d in dump)
        import json

        json.dumps(dump)  # plain-serializable
