import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demosplit.errors import InvalidInput, InvalidParameter
from demosplit.evalkit import (
    SynthPlan,
    interval_iou,
    microwave_plan,
    mock_caption,
    random_plan,
    score_change_points,
    score_matching,
    synthesize,
    toy_embeddings,
)
from demosplit.lexdist import NOTHING
from demosplit.matcher import build_distance_matrix, match
from demosplit.splitter import SegmentList, split
from demosplit.trajectory import dump_pose_track, load_pose_track


class TestChangePoints:
    @pytest.mark.parametrize("times", [[1.0], [0.5, 1.5, 2.25]])
    def test_perfect(self, times):
        s = score_change_points(times, times)
        assert (s.recall, s.false_positive_rate) == (1.0, 0.0)

    def test_hand_traced(self):
        s = score_change_points([1.05, 2.5, 2.9, 4.0], [1.0, 2.0, 3.0], margin=0.1)
        assert s.n_cr == 2 and s.n_cp == 3 and s.n_al == 4
        assert s.recall == pytest.approx(2 / 3)
        assert s.false_positive_rate == pytest.approx(0.5)

    def test_no_detections(self):
        s = score_change_points([], [1.0, 2.0])
        assert (s.recall, s.false_positive_rate) == (0.0, 0.0)

    def test_one_to_one(self):
        # a single alarm between two true points detects at most one of them
        s = score_change_points([1.05], [1.0, 1.1], margin=0.1)
        assert s.n_cr == 1

    def test_empty_truth(self):
        with pytest.raises(InvalidInput):
            score_change_points([1.0], [])

    def test_bad_margin(self):
        with pytest.raises(InvalidParameter):
            score_change_points([1.0], [1.0], margin=0)

    @given(
        st.lists(st.floats(0, 10), min_size=1, max_size=8),
        st.lists(st.floats(0, 10), min_size=1, max_size=8),
    )
    @settings(max_examples=100, deadline=None)
    def test_swap_symmetric_n_cr(self, a, b):
        assert score_change_points(a, b).n_cr == score_change_points(b, a).n_cr


class TestMatching:
    def test_perfect(self):
        truth = [(0.0, 1.0), (1.0, 2.5)]
        assert all(v == 1.0 for v in score_matching(truth, truth).ap_at.values())

    def test_single(self):
        s = score_matching([(0.0, 10.0)], [(5.0, 15.0)])
        assert s.per_instruction_iou[0] == pytest.approx(1 / 3)
        assert s.ap_at[0.5] == 0.0

    def test_counting(self):
        truth = [(0.0, 1.0)] * 4
        pred = [(0.0, 1.0), (0.0, 0.9), (0.0, 0.6), (0.0, 0.4)]
        s = score_matching(pred, truth)
        np.testing.assert_allclose(s.per_instruction_iou, [1.0, 0.9, 0.6, 0.4])
        assert s.ap_at == {0.5: 0.75, 0.75: 0.5, 0.95: 0.25}
        assert s.to_json()["ap_at"] == {"0.5": 0.75, "0.75": 0.5, "0.95": 0.25}

    def test_count_mismatch(self):
        with pytest.raises(InvalidInput):
            score_matching([(0, 1)], [(0, 1), (1, 2)])

    @pytest.mark.parametrize("a, b, iou", [((0, 1), (2, 3), 0.0), ((0, 2), (1, 2), 0.5), ((0, 4), (1, 2), 0.25)])
    def test_iou(self, a, b, iou):
        assert interval_iou(a, b) == pytest.approx(iou)

    @given(st.lists(st.tuples(st.floats(0, 5), st.floats(0.01, 5)), min_size=1, max_size=6), st.integers(0, 1000))
    @settings(max_examples=60, deadline=None)
    def test_ap_non_increasing(self, pairs, seed):
        truth = [(s, s + d) for s, d in pairs]
        rng = np.random.default_rng(seed)
        pred = [(a + rng.normal(0, 0.5), b + rng.normal(0, 0.5)) for a, b in truth]
        pred = [(min(a, b), max(a, b) + 1e-3) for a, b in pred]
        taus = np.linspace(0.05, 1.0, 20)
        ap = score_matching(pred, truth, taus).ap_at
        vals = [ap[float(t)] for t in taus]
        assert all(x >= y for x, y in zip(vals, vals[1:]))


class TestSynthesize:
    def test_two_waypoints(self):
        plan = SynthPlan(np.array([[0, 0, 0], [0.3, 0, 0]]), ("grasp a cup",), (1.0,))
        demo = synthesize(plan)
        assert demo.true_change_points.times == ()
        assert len(demo.script) == 1 and len(demo.true_segments) == 1
        assert len(demo.track) == 31

    def test_four_waypoints_one_dwell(self):
        demo = synthesize(random_plan(np.random.default_rng(0), 4, n_dwells=1))
        assert len(demo.true_segments) == 4
        assert len(demo.noise_sections) == 1
        assert demo.true_segments.descriptions[demo.noise_sections[0]].text == NOTHING
        assert len(demo.script) == 3
        assert len(demo.true_change_points) == 3

    def test_deterministic(self):
        a = synthesize(random_plan(np.random.default_rng(5), 5, n_dwells=2), noise=0.002, seed=5)
        b = synthesize(random_plan(np.random.default_rng(5), 5, n_dwells=2), noise=0.002, seed=5)
        assert a.track.p.tobytes() == b.track.p.tobytes()
        assert a.truth_json() == b.truth_json()

    def test_speed_zero_at_waypoints(self):
        demo = synthesize(random_plan(np.random.default_rng(2), 4))
        for t in demo.true_change_points:
            k = int(np.argmin(np.abs(demo.track.t - t)))
            np.testing.assert_allclose(demo.track.p[k + 1] - demo.track.p[k - 1], 0, atol=1e-3)

    def test_pose_file_precision(self):
        demo = synthesize(random_plan(np.random.default_rng(1), 3, n_dwells=1), noise=0.003, seed=1)
        import io

        back = load_pose_track(io.StringIO(dump_pose_track(demo.track)))
        assert np.array_equal(back.p, demo.track.p)

    def test_microwave_plan(self):
        demo = synthesize(microwave_plan())
        assert [d.text for d in demo.true_segments.descriptions] == [
            "open a microwave", NOTHING, "put a cup", "close the microwave"
        ]
        hinge = np.array([0.0, 0.0, 0.85])
        a, b = demo.true_segments.segments[0]
        door = demo.track.window(a, b).p
        np.testing.assert_allclose(np.linalg.norm(door - hinge, axis=1), 0.3, atol=1e-8)

    def test_arc_after_dwell_rejected(self):
        plan = microwave_plan()
        with pytest.raises(InvalidParameter):
            SynthPlan(plan.waypoints, plan.captions, plan.durations, dwells={0: 1.0, 1: 1.0}, arcs={2: [0, 0, 0.75]})


class TestMockCaption:
    def demo(self):
        return synthesize(random_plan(np.random.default_rng(3), 6, n_dwells=1))

    def test_exact(self):
        demo = self.demo()
        got = mock_caption(demo, demo.true_segments.segments, 0.0)
        assert got.descriptions == demo.true_segments.descriptions

    def test_always_wrong(self):
        demo = self.demo()
        got = mock_caption(demo, demo.true_segments.segments, 1.0, seed=1)
        assert all(g != t for g, t in zip(got.descriptions, demo.true_segments.descriptions))
        assert {g.text for g in got.descriptions} <= set(demo.vocabulary)

    def test_error_count(self):
        plan = SynthPlan(np.array([[0, 0, 0], [0.3, 0, 0], [0.3, 0.3, 0]]), ("grasp a cup", "put a cup"), (1.0, 1.0))
        demo = synthesize(plan)
        segs = SegmentList.from_boundaries(np.linspace(demo.track.start, demo.track.end, 1001))
        truth = mock_caption(demo, segs, 0.0)
        noisy = mock_caption(demo, segs, 0.3, seed=11)
        changed = sum(a != b for a, b in zip(truth.descriptions, noisy.descriptions))
        assert abs(changed - 300) <= 45


class TestEndToEnd:
    @pytest.mark.parametrize("seed", range(10))
    def test_perfect_captions_give_full_ap(self, seed):
        rng = np.random.default_rng(seed)
        demo = synthesize(random_plan(rng, int(rng.integers(3, 7)), n_dwells=1, dwell_range=(0.5, 1.0)), seed=seed)
        table = toy_embeddings()
        segs = split(demo.track)
        described = mock_caption(demo, segs, 0.0)
        dist = build_distance_matrix(described, demo.script, table)
        a = match(described, demo.script, dist)
        assert score_matching(a, demo.instruction_intervals).ap_at[0.95] == 1.0
