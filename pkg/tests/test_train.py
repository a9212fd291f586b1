"""Training loop: determinism, coverage, history, and error paths."""

import dataclasses

import numpy as np
import pytest

from shotsum.config import ModelConfig, TrainConfig
from shotsum.data_io import make_synthetic_record
from shotsum.model import build_params
from shotsum.train import NonFiniteLossError, TrainHistory, train_model

TINY = ModelConfig(frame_dim=8, audio_dim=4, caption_dim=6, heads=2, layers=2,
                   shot_counts=(2, 4, 6), pad_ratio=0.25, channel_multiplier=2,
                   head_hidden=16, caption_mode="tokens")


def records(count=3, t=48, seed0=0):
    return [make_synthetic_record(seed=seed0 + i, t=t, n=8, m=4, k=3, u=3,
                                  caption_dim=6) for i in range(count)]


class TestTrainModel:
    def test_zero_epochs_returns_initialization(self):
        recs = records(2)
        params, history = train_model(recs, TINY, TrainConfig(epochs=0, seed=5))
        fresh = build_params(TINY.with_dims(8, 4, 6), np.random.default_rng(5))
        for name, tensor in params:
            assert np.array_equal(tensor.data, fresh[name].data), name
        assert history.epochs == []

    def test_same_seed_is_bit_identical(self):
        recs = records(3)
        p1, h1 = train_model(recs, TINY, TrainConfig(epochs=3, seed=2))
        p2, h2 = train_model(recs, TINY, TrainConfig(epochs=3, seed=2))
        assert h1.to_csv() == h2.to_csv()
        for name, tensor in p1:
            assert np.array_equal(tensor.data, p2[name].data), name

    def test_loss_decreases_on_separable_data(self):
        recs = records(3)
        _, history = train_model(recs, TINY, TrainConfig(epochs=10))
        assert history.epochs[-1].loss < history.epochs[0].loss

    def test_every_parameter_receives_gradient(self):
        recs = records(2)
        _, history = train_model(recs, TINY, TrainConfig(epochs=2))
        assert history.uncovered() == []

    def test_mean_caption_mode_starves_query_key_projections(self):
        # one pooled caption key makes the attention weights constant,
        # so the query/key projections sit on a dead gradient path
        recs = records(2)
        cfg = dataclasses.replace(TINY, caption_mode="mean")
        _, history = train_model(recs, cfg, TrainConfig(epochs=2))
        assert set(history.uncovered()) == {"fusion.w_q", "fusion.w_k"}

    def test_short_video_error_names_the_video(self):
        recs = records(1, t=48) + [make_synthetic_record(seed=9, t=5, n=8, m=4,
                                                         k=2, u=2, caption_dim=6)]
        with pytest.raises(ValueError, match="video_9"):
            train_model(recs, TINY, TrainConfig(epochs=1))

    def test_frame_width_mismatch_rejected(self):
        bad = make_synthetic_record(seed=3, t=48, n=12, m=4, k=2, u=2, caption_dim=6)
        cfg = dataclasses.replace(TINY, infer_dims=False)
        with pytest.raises(ValueError, match="width"):
            train_model([bad], cfg, TrainConfig(epochs=1))

    def test_non_finite_loss_aborts_with_dump(self):
        rec = records(1)[0]
        poisoned = dataclasses.replace(
            rec, frame_feats=np.full_like(rec.frame_feats, np.nan))
        with pytest.raises(NonFiniteLossError, match="video_0"):
            train_model([poisoned], TINY, TrainConfig(epochs=1))

    def test_validation_tracks_best_epoch(self):
        train_recs = records(3)
        val_recs = records(2, seed0=50)
        _, history = train_model(train_recs, TINY, TrainConfig(epochs=4),
                                 val_records=val_recs)
        vals = [e.val_f for e in history.epochs]
        assert not any(np.isnan(v) for v in vals)
        assert history.best_epoch() == int(np.argmax(vals)) + 1
        assert history.best_params is not None
        assert set(history.best_params) == {n for n, _ in build_params(
            TINY.with_dims(8, 4, 6), np.random.default_rng(0))}

    def test_no_validation_set_leaves_nan_column(self):
        _, history = train_model(records(2), TINY, TrainConfig(epochs=2))
        assert all(np.isnan(e.val_f) for e in history.epochs)
        assert history.best_epoch() == len(history.epochs)
        assert history.best_params is None


class TestHistoryCsv:
    def test_layout_and_reproducible_content(self):
        _, history = train_model(records(2), TINY, TrainConfig(epochs=3))
        history.config_fingerprint = "ab" * 32
        lines = history.to_csv().splitlines()
        assert lines[0] == "# fingerprint=" + "ab" * 32
        assert lines[1] == "epoch,loss,train_f,val_f"
        assert len(lines) == 2 + 3
        # wall time varies between runs and must stay out of artifacts
        assert "wall" not in history.to_csv()

    def test_checkpoints_written_when_configured(self, tmp_path):
        train_model(records(2), TINY,
                    TrainConfig(epochs=4, checkpoint_every=2),
                    checkpoint_dir=tmp_path)
        names = sorted(p.name for p in tmp_path.glob("*.ckpt"))
        assert names == ["epoch_0002.ckpt", "epoch_0004.ckpt"]

    def test_empty_history_csv(self):
        history = TrainHistory(config_fingerprint="00")
        assert history.to_csv().splitlines()[1] == "epoch,loss,train_f,val_f"
