"""Configuration parsing, validation, and fingerprinting."""

import pytest

from shotsum.config import (
    ConfigError,
    ModelConfig,
    RunConfig,
    TrainConfig,
    apply_overrides,
    parse_config_file,
)


class TestDefaults:
    def test_published_model_defaults(self):
        cfg = RunConfig()
        assert cfg["model.frame_dim"] == 1024
        assert cfg["model.audio_dim"] == 128
        assert cfg["model.caption_dim"] == 512
        assert cfg["model.heads"] == 32
        assert cfg["model.layers"] == 4
        assert cfg["model.shot_counts"] == (5, 10, 15)
        assert cfg["model.channel_multiplier"] == 8
        assert cfg["model.head_hidden"] == 128

    def test_published_train_defaults(self):
        t = RunConfig().train()
        assert t.lr == pytest.approx(1e-4)
        assert t.alpha == pytest.approx(0.25)
        assert t.gamma == pytest.approx(2.0)
        assert t.epochs == 300

    def test_summary_budget_default(self):
        assert RunConfig()["summary.budget_ratio"] == pytest.approx(0.15)


class TestParsing:
    def test_file_with_comments_and_blanks(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\n"
            "\n"
            "model.layers = 2\n"
            "model.shot_counts = 2, 4, 6\n"
            "model.infer_dims = false\n"
            "train.lr = 0.001\n")
        cfg = parse_config_file(path)
        assert cfg["model.layers"] == 2
        assert cfg["model.shot_counts"] == (2, 4, 6)
        assert cfg["model.infer_dims"] is False
        assert cfg["train.lr"] == pytest.approx(1e-3)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("model.bogus = 1\n")
        with pytest.raises(ConfigError, match="unknown"):
            parse_config_file(path)
        with pytest.raises(ConfigError, match="unknown"):
            RunConfig(values={"nope": 1})

    def test_bad_value_names_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("model.layers = four\n")
        with pytest.raises(ConfigError, match="model.layers"):
            parse_config_file(path)

    def test_line_without_equals_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("model.layers\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config_file(path)

    def test_overrides_apply_in_order(self):
        cfg = RunConfig()
        apply_overrides(cfg, ["train.seed=3", "train.seed=7", "eval.mode=avg"])
        assert cfg["train.seed"] == 7
        assert cfg["eval.mode"] == "avg"
        with pytest.raises(ConfigError, match="key=value"):
            apply_overrides(cfg, ["train.seed"])


class TestValidation:
    def test_heads_must_divide_frame_dim(self):
        with pytest.raises(ConfigError, match="divisible"):
            ModelConfig(frame_dim=10, heads=4).validate()

    def test_caption_mode_checked(self):
        with pytest.raises(ConfigError, match="caption_mode"):
            ModelConfig(caption_mode="concat").validate()

    def test_shot_counts_required(self):
        with pytest.raises(ConfigError, match="shot_counts"):
            ModelConfig(shot_counts=()).validate()

    def test_train_bounds(self):
        with pytest.raises(ConfigError, match="lr"):
            TrainConfig(lr=0.0).validate()
        with pytest.raises(ConfigError, match="alpha"):
            TrainConfig(alpha=1.0).validate()
        with pytest.raises(ConfigError, match="gamma"):
            TrainConfig(gamma=-1.0).validate()
        with pytest.raises(ConfigError, match="precision"):
            TrainConfig(precision="half").validate()

    def test_default_config_builds_valid_dataclasses(self):
        cfg = RunConfig()
        cfg.model()
        cfg.train()


class TestFingerprint:
    def test_stable_across_instances(self):
        assert RunConfig().fingerprint() == RunConfig().fingerprint()

    def test_sensitive_to_any_value(self):
        base = RunConfig().fingerprint()
        changed = RunConfig()
        changed.set_value("train.seed", "1")
        assert changed.fingerprint() != base

    def test_canonical_text_is_sorted_and_complete(self):
        text = RunConfig().canonical_text()
        keys = [line.split("=")[0] for line in text.strip().splitlines()]
        assert keys == sorted(keys)
        assert "model.frame_dim=1024" in text
        assert "model.shot_counts=5,10,15" in text
        assert "train.lr=0.0001" in text  # repr keeps floats exact
