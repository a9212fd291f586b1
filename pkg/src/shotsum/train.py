"""Training loop: one video per step, focal objective, Adam.

Keeps per-epoch loss and train/validation F-score history, a snapshot
of the best-validation parameters, and a per-parameter gradient
coverage map (did this tensor ever receive a nonzero gradient). KTS
segmentations are computed once per video and cached across epochs;
features never change during training.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .config import ModelConfig, TrainConfig
from .data_io import VideoRecord
from .evaluation import fscore
from .model import build_params, forward_model
from .nn import AdamOptimizer, ParamSet, focal_loss
from .summarize import Segmentation, record_segmentation, summarize_scores


class NonFiniteLossError(RuntimeError):
    """Loss left the reals; message carries an activation dump."""


@dataclass
class EpochStats:
    epoch: int           # 1-based
    loss: float
    train_f: float
    val_f: float         # nan when no validation set


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    coverage: dict[str, bool] = field(default_factory=dict)
    wall_time_s: float = 0.0
    best_params: dict[str, np.ndarray] | None = None
    config_fingerprint: str = ""

    def best_epoch(self) -> int:
        """Epoch with the highest validation F (last epoch when no val)."""
        if not self.epochs:
            return 0
        with_val = [e for e in self.epochs if not np.isnan(e.val_f)]
        if not with_val:
            return self.epochs[-1].epoch
        return max(with_val, key=lambda e: e.val_f).epoch

    def uncovered(self) -> list[str]:
        return sorted(name for name, hit in self.coverage.items() if not hit)

    def to_csv(self) -> str:
        # Deliberately excludes wall time: identical config + seed must
        # produce byte-identical artifacts.
        lines = [f"# fingerprint={self.config_fingerprint}",
                 "epoch,loss,train_f,val_f"]
        for e in self.epochs:
            lines.append(f"{e.epoch},{e.loss!r},{e.train_f!r},{e.val_f!r}")
        return "\n".join(lines) + "\n"


def _record_arrays(rec: VideoRecord, dtype) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (rec.frame_feats.astype(dtype), rec.audio_feats.astype(dtype),
            rec.caption_sent_embeds.astype(dtype))


def _activation_dump(video_id: str, acts) -> str:
    lines = [f"non-finite loss on {video_id}; activation ranges:",
             f"{'activation':<34} {'shape':<14} {'min':>12} {'max':>12} finite"]
    for name, shape, lo, hi, finite in acts.summary_rows():
        lines.append(f"{name:<34} {str(shape):<14} {lo:>12.4g} {hi:>12.4g} {finite:6.3f}")
    return "\n".join(lines)


def evaluate_records(records: list[VideoRecord], params: ParamSet, cfg: ModelConfig,
                     mode: str = "max", budget_ratio: float = 0.15,
                     max_segments: int = 0, penalty_weight: float = 1.0,
                     seg_cache: dict[int, Segmentation] | None = None,
                     dtype=np.float64) -> list[float]:
    """Summary F-score per record with the given parameters."""
    out = []
    for rec in records:
        # cache key is the record object: base video ids can repeat
        # across datasets within one mixed training set
        if seg_cache is not None and id(rec) in seg_cache:
            seg = seg_cache[id(rec)]
        else:
            seg = record_segmentation(rec, max_segments, penalty_weight)
            if seg_cache is not None:
                seg_cache[id(rec)] = seg
        acts = forward_model(*_record_arrays(rec, dtype), params, cfg)
        scores = acts.scores.data.reshape(-1)
        summary, _ = summarize_scores(scores, seg, rec.picks, budget_ratio)
        out.append(fscore(summary.frame_mask, rec.user_summaries, mode))
    return out


def train_model(records: list[VideoRecord], model_cfg: ModelConfig,
                train_cfg: TrainConfig, val_records: list[VideoRecord] | None = None,
                eval_mode: str = "max", budget_ratio: float = 0.15,
                max_segments: int = 0, penalty_weight: float = 1.0,
                checkpoint_dir: str | Path | None = None,
                config_fingerprint: str = "") -> tuple[ParamSet, TrainHistory]:
    if not records:
        raise ValueError("no training records")
    cfg = model_cfg
    if cfg.infer_dims:
        first = records[0]
        cfg = cfg.with_dims(first.frame_feats.shape[1], first.audio_feats.shape[1],
                            first.caption_sent_embeds.shape[1])
        cfg.validate()
    largest = max(cfg.shot_counts)
    for rec in records + (val_records or []):
        if rec.n_subsampled < largest:
            raise ValueError(
                f"{rec.video_id}: {rec.n_subsampled} frames < largest shot count {largest}")
        if rec.frame_feats.shape[1] != cfg.frame_dim:
            raise ValueError(f"{rec.video_id}: frame width {rec.frame_feats.shape[1]} "
                             f"!= configured {cfg.frame_dim}")

    dtype = np.float64 if train_cfg.precision == "double" else np.float32
    rng = np.random.default_rng(train_cfg.seed)
    params = build_params(cfg, rng, dtype=dtype)
    opt = AdamOptimizer(params, lr=train_cfg.lr)
    history = TrainHistory(coverage={name: False for name, _ in params},
                           config_fingerprint=config_fingerprint)
    seg_cache: dict[int, Segmentation] = {}
    inputs = {rec.video_id: _record_arrays(rec, dtype) for rec in records}
    started = time.perf_counter()
    best_val = -np.inf

    for epoch in range(1, train_cfg.epochs + 1):
        order = rng.permutation(len(records))
        losses = []
        for idx in order:
            rec = records[idx]
            acts = forward_model(*inputs[rec.video_id], params, cfg)
            loss = focal_loss(acts.scores, rec.labels.reshape(-1, 1),
                              alpha=train_cfg.alpha, gamma=train_cfg.gamma)
            if not np.isfinite(loss.data):
                raise NonFiniteLossError(_activation_dump(rec.video_id, acts))
            params.zero_grad()
            loss.backward()
            for name, tensor in params:
                if tensor.grad is not None and np.any(tensor.grad):
                    history.coverage[name] = True
            opt.step()
            losses.append(float(loss.data))

        train_f = evaluate_records(records, params, cfg, eval_mode, budget_ratio,
                                   max_segments, penalty_weight, seg_cache, dtype)
        val_f = np.nan
        if val_records:
            val_scores = evaluate_records(val_records, params, cfg, eval_mode,
                                          budget_ratio, max_segments, penalty_weight,
                                          seg_cache, dtype)
            val_f = float(np.mean(val_scores))
            if val_f > best_val:
                best_val = val_f
                history.best_params = {n: t.data.copy() for n, t in params}
        history.epochs.append(EpochStats(epoch=epoch, loss=float(np.mean(losses)),
                                         train_f=float(np.mean(train_f)), val_f=val_f))
        if (checkpoint_dir is not None and train_cfg.checkpoint_every > 0
                and epoch % train_cfg.checkpoint_every == 0):
            save_checkpoint(Path(checkpoint_dir) / f"epoch_{epoch:04d}.ckpt",
                            params.state_arrays())

    history.wall_time_s = time.perf_counter() - started
    return params, history
