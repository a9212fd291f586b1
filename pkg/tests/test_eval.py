"""F-score protocol and the cross-validation harness."""

import numpy as np
import pytest

from shotsum.config import ModelConfig, TrainConfig
from shotsum.data_io import SplitPlan, make_splits, make_synthetic_record, qualify
from shotsum.evaluation import EvalReport, FoldResult, fscore, run_cv

TINY = ModelConfig(frame_dim=8, audio_dim=4, caption_dim=6, heads=2, layers=1,
                   shot_counts=(2, 4), pad_ratio=0.25, channel_multiplier=2,
                   head_hidden=8, caption_mode="tokens")


class TestFscore:
    def test_half_overlap_hand_example(self):
        assert fscore(np.array([1, 1, 0, 0]), np.array([[1, 0, 1, 0]])) == \
            pytest.approx(0.5, abs=1e-12)

    def test_exact_match_is_one(self):
        user = np.array([[0, 1, 1, 0, 1]])
        assert fscore(user[0], user) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_is_zero(self):
        assert fscore(np.array([1, 1, 0, 0]), np.array([[0, 0, 1, 1]])) == 0.0

    def test_empty_masks_score_zero_not_nan(self):
        assert fscore(np.zeros(4), np.zeros((2, 4))) == 0.0
        assert fscore(np.ones(4), np.zeros((1, 4))) == 0.0
        assert fscore(np.zeros(4), np.ones((1, 4))) == 0.0

    def test_length_mismatch_and_bad_mode(self):
        with pytest.raises(ValueError, match="frames"):
            fscore(np.ones(3), np.ones((1, 4)))
        with pytest.raises(ValueError, match="mode"):
            fscore(np.ones(4), np.ones((1, 4)), mode="median")

    def test_symmetric_for_single_user(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = (rng.uniform(size=30) < 0.3).astype(np.uint8)
            b = (rng.uniform(size=30) < 0.3).astype(np.uint8)
            assert fscore(a, b[None, :]) == pytest.approx(
                fscore(b, a[None, :]), abs=1e-12)

    def test_max_mode_dominates_avg(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            pred = (rng.uniform(size=25) < 0.4).astype(np.uint8)
            users = (rng.uniform(size=(4, 25)) < 0.4).astype(np.uint8)
            assert fscore(pred, users, "max") >= fscore(pred, users, "avg") - 1e-12

    def test_adding_user_frame_to_subset_prediction_improves(self):
        user = np.zeros(20, dtype=np.uint8)
        user[5:15] = 1
        pred = np.zeros(20, dtype=np.uint8)
        pred[5:10] = 1
        grown = pred.copy()
        grown[10] = 1
        # precision stays 1, recall strictly grows
        assert fscore(grown, user[None, :]) > fscore(pred, user[None, :])


class TestEvalReport:
    def _report(self):
        r = EvalReport(policy="standard", mode="max", config_fingerprint="cafe" * 16)
        r.folds.append(FoldResult(0, {"v0": 0.5, "v1": 0.7}, {"v0": 0.6, "v1": 0.8}, 3))
        r.folds.append(FoldResult(1, {"v2": 0.9}, {"v2": 0.9}, 1))
        return r

    def test_overall_is_mean_of_fold_means(self):
        r = self._report()
        assert r.overall_final == pytest.approx((0.6 + 0.9) / 2)
        assert r.overall_best == pytest.approx((0.7 + 0.9) / 2)

    def test_csv_layout(self):
        lines = self._report().to_csv().splitlines()
        assert lines[0] == "# fingerprint=" + "cafe" * 16
        assert lines[1] == "fold,video,fscore_final,fscore_best"
        assert lines[2] == "0,v0,0.500000,0.600000"
        assert lines[-1].startswith("ALL,MEAN,")

    def test_text_block_carries_reference_rows(self):
        text = self._report().to_text()
        assert "55.3" in text and "69.3" in text
        assert "image only" in text
        assert "fold 0" in text and "overall" in text


class TestRunCv:
    def _records(self, count=6, t=24):
        recs = {}
        for i in range(count):
            rec = make_synthetic_record(seed=i, t=t, n=8, m=4, k=2, u=3, caption_dim=6)
            recs[qualify("ds", rec.video_id)] = rec
        return recs

    def test_standard_cv_produces_fold_entries(self):
        records = self._records()
        plan = make_splits({"ds": [k.split("/")[1] for k in records]},
                           "ds", "standard", 3, seed=0)
        report = run_cv(records, plan, TINY, TrainConfig(epochs=2),
                        config_fingerprint="f" * 64)
        assert len(report.folds) == 3
        per_video = [f for fold in report.folds for f in fold.per_video.values()]
        assert len(per_video) == 6
        assert all(0.0 <= f <= 1.0 for f in per_video)
        assert report.overall_final == pytest.approx(
            np.mean([fold.mean_final for fold in report.folds]))

    def test_best_epoch_numbers_present(self):
        records = self._records(count=4)
        plan = make_splits({"ds": [k.split("/")[1] for k in records]},
                           "ds", "standard", 2, seed=0)
        report = run_cv(records, plan, TINY, TrainConfig(epochs=3))
        for fold in report.folds:
            assert 1 <= fold.best_epoch <= 3
            assert fold.per_video_best.keys() == fold.per_video.keys()

    def test_empty_test_fold_rejected(self):
        records = self._records(count=2)
        plan = SplitPlan("standard", "ds", 0,
                         folds=((tuple(records), ()),))
        with pytest.raises(ValueError, match="empty test set"):
            run_cv(records, plan, TINY, TrainConfig(epochs=1))
