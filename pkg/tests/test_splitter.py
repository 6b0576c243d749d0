import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from demosplit.errors import InvalidParameter
from demosplit.evalkit import SynthPlan, minimum_jerk, random_plan, synthesize
from demosplit.splitter import (
    SegmentList,
    change_points_of,
    find_velocity_minima,
    split,
    split_with_profile,
    uniform_split,
)
from demosplit.trajectory import PoseTrack, VelocityProfile


def profile(speed, rate=1.0):
    speed = np.asarray(speed, float)
    return VelocityProfile(np.arange(len(speed)) / rate, speed, 1)


def two_reach_track(noise=0.0, seed=0):
    a, b, c = np.zeros(3), np.array([0.3, 0.0, 0.0]), np.array([0.3, 0.3, 0.1])
    p = np.vstack([minimum_jerk(a, b, 30), minimum_jerk(b, c, 30)[1:]])
    if noise:
        p = p + np.random.default_rng(seed).normal(0, noise, p.shape)
    return PoseTrack(np.arange(len(p)) / 30.0, p, nominal_rate=30.0)


def accelerating_track(duration, rate=30.0):
    t = np.arange(int(round(duration * rate)) + 1) / rate
    return PoseTrack(t, np.c_[t**2, np.zeros_like(t), np.zeros_like(t)])


class TestMinima:
    def test_monotone(self):
        assert len(find_velocity_minima(profile(np.arange(10.0)))) == 0

    def test_plateau_midpoint(self):
        assert find_velocity_minima(profile([3, 1, 1, 1, 3])).times == (2.0,)

    def test_even_plateau_midpoint(self):
        assert find_velocity_minima(profile([3, 1, 1, 3])).times == (1.5,)

    def test_plateau_at_track_end_is_not_a_minimum(self):
        assert len(find_velocity_minima(profile([3, 2, 1, 1]))) == 0

    def test_shoulder_is_not_a_minimum(self):
        assert len(find_velocity_minima(profile([3, 2, 2, 1, 2]))) == 1

    def test_min_separation_keeps_deeper(self):
        s = [5, 1, 4, 0.5, 4, 5, 5, 2, 5]
        assert find_velocity_minima(profile(s)).times == (1.0, 3.0, 7.0)
        assert find_velocity_minima(profile(s), min_separation=2.5).times == (3.0, 7.0)

    def test_two_reach_junction(self):
        cps = split_with_profile(two_reach_track())[1]
        assert len(cps) == 1
        assert cps.times[0] == pytest.approx(1.0, abs=0.05)

    def test_noise_moves_change_point_less_than_window(self):
        window_s = 5 / 30.0
        ok = 0
        for seed in range(100):
            cps = np.array(split_with_profile(two_reach_track(noise=0.001, seed=seed))[1].times)
            ok += len(cps) > 0 and np.min(np.abs(cps - 1.0)) < window_s
        assert ok >= 95


class TestSplit:
    def test_no_minima_single_segment(self):
        track = accelerating_track(2.0)
        assert split(track).segments == ((track.start, track.end),)

    def test_three_reaches(self):
        # waypoints include the start pose: 4 waypoints make 3 reaches
        demo = synthesize(random_plan(np.random.default_rng(1), 4))
        segs = split(demo.track)
        assert len(segs) == 3
        assert len(change_points_of(segs)) == 2

    @pytest.mark.parametrize("seed", range(5))
    def test_boundaries_are_endpoints_plus_minima(self, seed):
        demo = synthesize(random_plan(np.random.default_rng(seed), 5, n_dwells=1), noise=0.002, seed=seed)
        segs, cps, _ = split_with_profile(demo.track)
        assert segs.boundaries == [demo.track.start, *cps.times, demo.track.end]
        assert segs.start == demo.track.start and segs.end == demo.track.end
        for (a, b), (c, d) in zip(segs, segs.segments[1:]):
            assert b == c and a < b

    def test_rigid_motion_invariance(self):
        demo = synthesize(random_plan(np.random.default_rng(9), 5, n_dwells=1), noise=0.001, seed=9)
        R = Rotation.from_euler("xyz", [0.3, -1.1, 2.0]).as_matrix()
        moved = demo.track.with_positions(demo.track.p @ R.T + [1.0, -2.0, 0.5])
        a, b = split(demo.track), split(moved)
        assert len(a) == len(b)
        np.testing.assert_allclose(a.boundaries, b.boundaries)


class TestUniform:
    def test_exact_division(self):
        segs = uniform_split(accelerating_track(2.0), 0.5)
        assert len(segs) == 4
        assert segs.boundaries == pytest.approx([0, 0.5, 1.0, 1.5, 2.0])

    def test_partial_last_segment(self):
        segs = uniform_split(accelerating_track(2.3, rate=10), 0.5)
        assert len(segs) == 5
        assert segs[-1][1] - segs[-1][0] == pytest.approx(0.3)

    @pytest.mark.parametrize("period", [2.0, 5.0])
    def test_long_period(self, period):
        assert len(uniform_split(accelerating_track(2.0), period)) == 1

    @pytest.mark.parametrize("period", [0.0, -1.0])
    def test_bad_period(self, period):
        with pytest.raises(InvalidParameter):
            uniform_split(accelerating_track(2.0), period)


class TestSegmentList:
    def test_json_round_trip(self):
        segs = SegmentList.from_boundaries([0.0, 0.4, 1.0])
        assert SegmentList.from_json(segs.to_json()) == segs

    def test_gap_rejected(self):
        with pytest.raises(Exception):
            SegmentList(((0.0, 1.0), (1.1, 2.0)))


def test_plan_needs_two_waypoints():
    with pytest.raises(InvalidParameter):
        SynthPlan(np.zeros((1, 3)), (), ())
