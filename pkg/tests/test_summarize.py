"""Segmentation, scoring, selection, and summary assembly.

The segmentation DP and the knapsack are checked against exhaustive
enumeration on small instances; those brute-force oracles are also what
the acceptance suite reuses at scale.
"""

import itertools

import numpy as np
import pytest

from shotsum.summarize import (
    Segmentation,
    build_summary,
    frame_scores_to_original,
    knapsack_select,
    kts_boundaries,
    kts_costs,
    kts_segment,
    mask_run_lengths,
    record_segmentation,
    segment_count_penalty,
    segmentation_from_boundaries,
    shot_scores,
    summarize_scores,
)


def segment_scatter(block: np.ndarray) -> float:
    """Independent within-segment scatter: squared distance to the mean."""
    centered = block - block.mean(axis=0)
    return float((centered ** 2).sum())


def exhaustive_kts(features: np.ndarray, m: int) -> tuple[float, list[int]]:
    """Try every placement of m change points; first optimum in cut order."""
    t = features.shape[0]
    best_cost, best_cuts = np.inf, []
    for cuts in itertools.combinations(range(1, t), m):
        edges = [0, *cuts, t]
        cost = sum(segment_scatter(features[edges[i]:edges[i + 1]])
                   for i in range(len(edges) - 1))
        if cost < best_cost - 1e-12:
            best_cost, best_cuts = cost, list(cuts)
    return best_cost, best_cuts


def exhaustive_knapsack(values, weights, capacity) -> tuple[float, tuple[int, ...]]:
    """Best value over all subsets; lexicographically smallest on ties."""
    n = len(values)
    best_val, best_set = 0.0, ()
    for r in range(n + 1):
        for subset in itertools.combinations(range(n), r):
            if sum(weights[i] for i in subset) > capacity:
                continue
            val = sum(values[i] for i in subset)
            if val > best_val + 1e-12 or (abs(val - best_val) <= 1e-12
                                          and subset < best_set):
                best_val, best_set = val, subset
    return best_val, best_set


class TestKts:
    def test_clean_two_level_signal(self):
        feats = np.array([[0.0], [0.0], [0.0], [1.0], [1.0], [1.0]])
        costs, bounds = kts_costs(feats, max_segments=1)
        assert costs[1] == pytest.approx(0.0, abs=1e-12)
        assert bounds[1] == [3]

    def test_zero_cuts_cost_is_total_scatter(self):
        rng = np.random.default_rng(0)
        feats = rng.standard_normal((9, 3))
        costs, bounds = kts_costs(feats, max_segments=2)
        assert costs[0] == pytest.approx(segment_scatter(feats), abs=1e-9)
        assert bounds[0] == []

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_exhaustive_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        t = int(rng.integers(5, 13))
        feats = rng.standard_normal((t, 4))
        max_m = min(3, t - 1)
        costs, bounds = kts_costs(feats, max_segments=max_m)
        for m in range(max_m + 1):
            want_cost, want_cuts = exhaustive_kts(feats, m)
            assert costs[m] == pytest.approx(want_cost, abs=1e-9)
            assert bounds[m] == want_cuts

    def test_constant_features_prefer_no_cuts(self):
        feats = np.ones((12, 2))
        assert kts_boundaries(feats, max_segments=3) == []

    def test_penalty_weight_reduces_cut_count(self):
        rng = np.random.default_rng(3)
        feats = np.concatenate([rng.standard_normal((5, 2)) + off
                                for off in (0.0, 6.0, 12.0)])
        cuts_free = kts_boundaries(feats, max_segments=4, penalty_weight=0.0)
        cuts_heavy = kts_boundaries(feats, max_segments=4, penalty_weight=1e6)
        assert len(cuts_heavy) <= len(cuts_free)
        assert cuts_heavy == []

    def test_penalty_zero_for_zero_cuts(self):
        assert segment_count_penalty(100, 0, 2.5) == 0.0
        assert segment_count_penalty(100, 4, 2.5) == pytest.approx(
            2.5 * 4 * (np.log(25.0) + 1.0))

    def test_rejects_tiny_and_oversplit(self):
        with pytest.raises(ValueError):
            kts_costs(np.zeros((1, 2)), 0)
        with pytest.raises(ValueError):
            kts_costs(np.zeros((4, 2)), 4)

    def test_boundary_to_original_frames_uses_pick_midpoint(self):
        picks = np.array([0, 15, 30, 45])
        seg = segmentation_from_boundaries([2], picks, n_frames_original=60)
        assert seg.change_points.tolist() == [[0, 22], [23, 59]]
        seg.validate()

    def test_kts_segment_tiles_original_video(self):
        rng = np.random.default_rng(7)
        feats = rng.standard_normal((20, 4))
        picks = 15 * np.arange(20)
        seg = kts_segment(feats, picks, n_frames_original=300)
        seg.validate()
        assert seg.frame_counts().sum() == 300


class TestKnapsack:
    def test_prefers_earlier_segment_on_tie(self):
        assert knapsack_select([5.0, 5.0], [3, 3], 3) == (0,)

    def test_skips_high_value_for_better_pair(self):
        assert knapsack_select([6.0, 10.0, 12.0], [1, 2, 3], 5) == (1, 2)

    def test_zero_capacity_selects_nothing(self):
        assert knapsack_select([1.0, 2.0], [1, 1], 0) == ()

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError):
            knapsack_select([1.0], [-1], 3)
        with pytest.raises(ValueError):
            knapsack_select([1.0], [1], -1)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_exhaustive_enumeration(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(1, 11))
        values = rng.uniform(0.1, 5.0, size=n).round(3).tolist()
        weights = rng.integers(1, 8, size=n).tolist()
        capacity = int(rng.integers(0, 16))
        got = knapsack_select(values, weights, capacity)
        want_val, want_set = exhaustive_knapsack(values, weights, capacity)
        assert sum(values[i] for i in got) == pytest.approx(want_val, abs=1e-9)
        assert got == want_set


class TestScoreExpansion:
    def test_exact_pick_positions_keep_own_score(self):
        picks = np.array([0, 15, 30])
        scores = np.array([1.0, 2.0, 3.0])
        out = frame_scores_to_original(scores, picks, 45)
        assert out[0] == 1.0 and out[15] == 2.0 and out[30] == 3.0

    def test_nearest_pick_wins_and_ties_go_left(self):
        picks = np.array([0, 10])
        scores = np.array([1.0, 2.0])
        out = frame_scores_to_original(scores, picks, 12)
        assert out[4] == 1.0
        assert out[5] == 1.0  # equidistant: lower pick
        assert out[6] == 2.0
        assert out[11] == 2.0

    def test_shot_scores_are_segment_means(self):
        picks = np.arange(6)
        seg = Segmentation(np.array([[0, 2], [3, 5]]), 6)
        scores = np.array([1.0, 2.0, 3.0, 10.0, 10.0, 10.0])
        np.testing.assert_allclose(shot_scores(scores, seg, picks), [2.0, 10.0])


class TestSummaryAssembly:
    def _three_segment(self):
        cp = np.array([[0, 9], [10, 79], [80, 99]])
        return Segmentation(cp, 100)

    def test_budget_is_enforced(self):
        seg = self._three_segment()
        with pytest.raises(ValueError):
            build_summary([1], seg, budget_ratio=0.15)
        summary = build_summary([0], seg, budget_ratio=0.15)
        assert summary.frame_mask.sum() == 10

    def test_selection_mask_matches_segments(self):
        seg = self._three_segment()
        summary = build_summary([0, 2], seg, budget_ratio=0.4)
        assert summary.frame_mask[:10].all()
        assert not summary.frame_mask[10:80].any()
        assert summary.frame_mask[80:].all()
        assert mask_run_lengths(summary.frame_mask) == [[0, 10], [80, 20]]

    def test_summarize_respects_budget_and_prefers_high_scores(self):
        picks = np.arange(0, 100, 10)
        seg = Segmentation(np.array([[0, 29], [30, 59], [60, 99]]), 100)
        scores = np.array([0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.2, 0.2, 0.2, 0.2])
        summary, seg_scores = summarize_scores(scores, seg, picks, budget_ratio=0.31)
        assert summary.selected_segments == (1,)
        # frames 56..59 inherit the next segment's pick, diluting the mean
        assert seg_scores[1] == pytest.approx((26 * 0.9 + 4 * 0.2) / 30)
        assert seg_scores[1] == seg_scores.max()

    def test_positive_scaling_keeps_selection(self):
        rng = np.random.default_rng(5)
        picks = np.arange(0, 120, 10)
        cp = np.array([[0, 39], [40, 69], [70, 99], [100, 119]])
        seg = Segmentation(cp, 120)
        scores = rng.uniform(0.05, 1.0, size=12)
        base, _ = summarize_scores(scores, seg, picks, budget_ratio=0.6)
        scaled, _ = summarize_scores(7.0 * scores, seg, picks, budget_ratio=0.6)
        assert base.selected_segments == scaled.selected_segments

    def test_json_export_round_trips(self):
        import json

        seg = self._three_segment()
        summary = build_summary([0], seg, budget_ratio=0.15)
        payload = json.loads(summary.to_json(seg, np.array([0.5, 0.2, 0.1]),
                                             extra={"video_id": "v"}))
        assert payload["selected_segments"] == [0]
        assert payload["summary_frames"] == 10
        assert payload["segments"][0]["selected"] is True
        assert payload["video_id"] == "v"


class TestRecordSegmentation:
    def test_precomputed_change_points_win(self):
        from shotsum.data_io import make_synthetic_record
        import dataclasses

        rec = make_synthetic_record(seed=0, t=20, n=4, m=2, k=2, u=2)
        cp = np.array([[0, 149], [150, 299]], dtype=np.int64)
        rec = dataclasses.replace(rec, change_points=cp)
        seg = record_segmentation(rec)
        assert seg.change_points.tolist() == cp.tolist()

    def test_falls_back_to_kts(self):
        from shotsum.data_io import make_synthetic_record

        rec = make_synthetic_record(seed=1, t=24, n=6, m=2, k=2, u=2)
        assert rec.change_points is None
        seg = record_segmentation(rec)
        seg.validate()
        assert seg.n_frames_original == rec.n_frames_original
