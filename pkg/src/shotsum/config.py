"""Run configuration: flat key=value files, overrides, fingerprinting.

Every option lives in one registry with its default, parser, and a short
unit note. Unknown keys are rejected, and the sha256 fingerprint of the
canonicalized effective configuration is stamped into every artifact so
runs are attributable to an exact configuration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .shotconv import ScaleConfig


class ConfigError(ValueError):
    """Unknown key or unparseable value."""


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_ints(s: str) -> tuple[int, ...]:
    return tuple(int(part) for part in s.split(",") if part.strip())


# key -> (default, parser, unit/meaning note)
CONFIG_REGISTRY: dict[str, tuple[object, object, str]] = {
    "model.frame_dim": (1024, int, "frame feature width N"),
    "model.audio_dim": (128, int, "audio feature width M"),
    "model.caption_dim": (512, int, "caption embedding width"),
    "model.heads": (32, int, "attention heads"),
    "model.layers": (4, int, "stacked shot layers L"),
    "model.shot_counts": ((5, 10, 15), _parse_ints, "shots per scale, comma separated"),
    "model.pad_ratio": (0.05, float, "cross-shot padding fraction of shot length"),
    "model.channel_multiplier": (8, int, "channel lift factor"),
    "model.filters_per_branch": (1, int, "conv filters per kernel size"),
    "model.head_hidden": (128, int, "hidden width of the scoring head"),
    "model.caption_mode": ("mean", str, "caption pooling: mean or tokens"),
    "model.infer_dims": (True, _parse_bool, "take N/M/caption width from the data"),
    "train.lr": (1e-4, float, "Adam learning rate"),
    "train.epochs": (300, int, "training epochs"),
    "train.seed": (0, int, "global seed"),
    "train.alpha": (0.25, float, "focal loss positive-class weight"),
    "train.gamma": (2.0, float, "focal loss focusing exponent"),
    "train.precision": ("double", str, "double (tests) or single (release)"),
    "train.checkpoint_every": (0, int, "epochs between checkpoints, 0 = final only"),
    "split.policy": ("standard", str, "standard, augment, or transfer"),
    "split.folds": (5, int, "cross-validation folds"),
    "split.target": ("", str, "target dataset name"),
    "summary.budget_ratio": (0.15, float, "summary length cap, fraction of original frames"),
    "summary.max_segments": (0, int, "KTS change-point cap, 0 = T // 10"),
    "summary.penalty_weight": (1.0, float, "KTS segment-count penalty weight"),
    "eval.mode": ("max", str, "F-score over users: max or avg"),
    "synth.videos": (8, int, "videos per synthetic dataset"),
    "synth.frames": (120, int, "subsampled frames per synthetic video"),
    "synth.users": (4, int, "annotators per synthetic video"),
    "synth.captions": (3, int, "caption sentences per synthetic video"),
    "gradcheck.frames": (24, int, "sequence length for the gradient check"),
    "gradcheck.coords": (64, int, "sampled coordinates per tensor"),
    "trace.shots": (3, int, "shot count for propagation tracing"),
    "trace.layers": (2, int, "layers for propagation tracing"),
    "trace.frames": (24, int, "sequence length for propagation tracing"),
}


@dataclass(frozen=True)
class ModelConfig:
    frame_dim: int = 1024
    audio_dim: int = 128
    caption_dim: int = 512
    heads: int = 32
    layers: int = 4
    shot_counts: tuple[int, ...] = (5, 10, 15)
    pad_ratio: float = 0.05
    channel_multiplier: int = 8
    filters_per_branch: int = 1
    head_hidden: int = 128
    caption_mode: str = "mean"
    infer_dims: bool = True

    def scales(self) -> tuple[ScaleConfig, ...]:
        return tuple(ScaleConfig(shot_count=s, pad_ratio=self.pad_ratio,
                                 channel_multiplier=self.channel_multiplier,
                                 filters_per_branch=self.filters_per_branch)
                     for s in self.shot_counts)

    def validate(self) -> None:
        if self.layers < 1:
            raise ConfigError("model.layers must be >= 1")
        if self.frame_dim % self.heads != 0:
            raise ConfigError(
                f"model.frame_dim {self.frame_dim} not divisible by model.heads {self.heads}")
        if self.caption_mode not in ("mean", "tokens"):
            raise ConfigError(f"model.caption_mode must be mean or tokens, got {self.caption_mode!r}")
        if not self.shot_counts:
            raise ConfigError("model.shot_counts must list at least one scale")
        for cfg in self.scales():
            cfg.validate(self.frame_dim)

    def with_dims(self, frame_dim: int, audio_dim: int, caption_dim: int) -> "ModelConfig":
        return ModelConfig(frame_dim=frame_dim, audio_dim=audio_dim, caption_dim=caption_dim,
                           heads=self.heads, layers=self.layers, shot_counts=self.shot_counts,
                           pad_ratio=self.pad_ratio, channel_multiplier=self.channel_multiplier,
                           filters_per_branch=self.filters_per_branch,
                           head_hidden=self.head_hidden, caption_mode=self.caption_mode,
                           infer_dims=self.infer_dims)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 300
    seed: int = 0
    alpha: float = 0.25
    gamma: float = 2.0
    precision: str = "double"
    checkpoint_every: int = 0

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigError("train.lr must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("train.alpha must be in (0, 1)")
        if self.gamma < 0.0:
            raise ConfigError("train.gamma must be >= 0")
        if self.epochs < 0:
            raise ConfigError("train.epochs must be >= 0")
        if self.precision not in ("double", "single"):
            raise ConfigError(f"train.precision must be double or single, got {self.precision!r}")


@dataclass
class RunConfig:
    """Every knob of a run, flattened to registry keys plus the values."""

    values: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        merged = {key: default for key, (default, _, _) in CONFIG_REGISTRY.items()}
        for key, value in self.values.items():
            if key not in CONFIG_REGISTRY:
                raise ConfigError(f"unknown configuration key: {key}")
            merged[key] = value
        self.values = merged

    def __getitem__(self, key: str):
        return self.values[key]

    def set_value(self, key: str, raw: str) -> None:
        if key not in CONFIG_REGISTRY:
            raise ConfigError(f"unknown configuration key: {key}")
        _, parser, _ = CONFIG_REGISTRY[key]
        try:
            self.values[key] = parser(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc

    def model(self) -> ModelConfig:
        cfg = ModelConfig(
            frame_dim=self["model.frame_dim"], audio_dim=self["model.audio_dim"],
            caption_dim=self["model.caption_dim"], heads=self["model.heads"],
            layers=self["model.layers"], shot_counts=tuple(self["model.shot_counts"]),
            pad_ratio=self["model.pad_ratio"],
            channel_multiplier=self["model.channel_multiplier"],
            filters_per_branch=self["model.filters_per_branch"],
            head_hidden=self["model.head_hidden"], caption_mode=self["model.caption_mode"],
            infer_dims=self["model.infer_dims"])
        cfg.validate()
        return cfg

    def train(self) -> TrainConfig:
        cfg = TrainConfig(
            lr=self["train.lr"], epochs=self["train.epochs"], seed=self["train.seed"],
            alpha=self["train.alpha"], gamma=self["train.gamma"],
            precision=self["train.precision"],
            checkpoint_every=self["train.checkpoint_every"])
        cfg.validate()
        return cfg

    def canonical_text(self) -> str:
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, tuple):
                rendered = ",".join(str(v) for v in value)
            else:
                rendered = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{key}={rendered}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def parse_config_file(path: str | Path) -> RunConfig:
    """Flat `key = value` lines; # comments and blank lines ignored."""
    cfg = RunConfig()
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        cfg.set_value(key.strip(), raw.strip())
    return cfg


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """--set key=value pairs, applied in order."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, _, raw = item.partition("=")
        cfg.set_value(key.strip(), raw.strip())
    return cfg
