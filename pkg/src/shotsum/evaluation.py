"""F-score protocol and the cross-validation harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .config import ModelConfig, TrainConfig
from .data_io import SplitPlan, VideoRecord, split_qualified

# Published full-scale results on the two public benchmarks, kept as
# non-binding references in report output. Row: (setting, SumMe, TVSum).
REFERENCE_FSCORES: tuple[tuple[str, float, float], ...] = (
    ("standard", 55.3, 69.3),
    ("augment", 56.9, 69.4),
    ("transfer", 49.8, 61.0),
)
REFERENCE_ABLATIONS: tuple[tuple[str, float, float], ...] = (
    ("image only", 52.0, 68.0),
    ("image + audio", 54.5, 68.2),
    ("image + caption", 53.8, 68.3),
    ("full model", 55.3, 69.3),
)


def fscore(pred_mask: np.ndarray, user_summaries: np.ndarray, mode: str = "max") -> float:
    """Frame-overlap F-score against each annotator, reduced by max or avg."""
    pred = np.asarray(pred_mask).astype(bool)
    users = np.atleast_2d(np.asarray(user_summaries)).astype(bool)
    if pred.shape[0] != users.shape[1]:
        raise ValueError(
            f"prediction covers {pred.shape[0]} frames, summaries cover {users.shape[1]}")
    if mode not in ("max", "avg"):
        raise ValueError(f"mode must be max or avg, got {mode!r}")
    scores = []
    n_pred = pred.sum()
    for user in users:
        overlap = float(np.logical_and(pred, user).sum())
        precision = overlap / n_pred if n_pred else 0.0
        recall = overlap / user.sum() if user.sum() else 0.0
        if precision + recall == 0.0:
            scores.append(0.0)
        else:
            scores.append(2.0 * precision * recall / (precision + recall))
    return float(max(scores) if mode == "max" else np.mean(scores))


@dataclass
class FoldResult:
    fold: int
    per_video: dict[str, float]          # final-epoch F per test video
    per_video_best: dict[str, float]     # best-epoch F per test video
    best_epoch: int

    @property
    def mean_final(self) -> float:
        return float(np.mean(list(self.per_video.values())))

    @property
    def mean_best(self) -> float:
        return float(np.mean(list(self.per_video_best.values())))


@dataclass
class EvalReport:
    policy: str
    mode: str
    config_fingerprint: str
    folds: list[FoldResult] = field(default_factory=list)

    @property
    def overall_final(self) -> float:
        return float(np.mean([f.mean_final for f in self.folds]))

    @property
    def overall_best(self) -> float:
        return float(np.mean([f.mean_best for f in self.folds]))

    def to_csv(self) -> str:
        lines = [f"# fingerprint={self.config_fingerprint}",
                 "fold,video,fscore_final,fscore_best"]
        for fold in self.folds:
            for vid in sorted(fold.per_video):
                lines.append(f"{fold.fold},{vid},{fold.per_video[vid]:.6f},"
                             f"{fold.per_video_best[vid]:.6f}")
        for fold in self.folds:
            lines.append(f"{fold.fold},MEAN,{fold.mean_final:.6f},{fold.mean_best:.6f}")
        lines.append(f"ALL,MEAN,{self.overall_final:.6f},{self.overall_best:.6f}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = 58
        lines = ["=" * width,
                 f"evaluation  policy={self.policy}  mode={self.mode}",
                 f"fingerprint {self.config_fingerprint[:16]}...",
                 "-" * width]
        for fold in self.folds:
            lines.append(f"fold {fold.fold}: final {100 * fold.mean_final:5.1f}  "
                         f"best {100 * fold.mean_best:5.1f}  (epoch {fold.best_epoch})")
        lines.append("-" * width)
        lines.append(f"overall: final {100 * self.overall_final:5.1f}  "
                     f"best {100 * self.overall_best:5.1f}")
        lines.append("")
        lines.append("published full-scale references (SumMe / TVSum, F x 100):")
        for setting, summe, tvsum in REFERENCE_FSCORES:
            lines.append(f"  {setting:<10} {summe:5.1f} / {tvsum:5.1f}")
        lines.append("modality ablations at full scale:")
        for setting, summe, tvsum in REFERENCE_ABLATIONS:
            lines.append(f"  {setting:<16} {summe:5.1f} / {tvsum:5.1f}")
        lines.append("=" * width)
        return "\n".join(lines) + "\n"


def run_cv(records: Mapping[str, VideoRecord], plan: SplitPlan, model_cfg: ModelConfig,
           train_cfg: TrainConfig, mode: str = "max", budget_ratio: float = 0.15,
           max_segments: int = 0, penalty_weight: float = 1.0,
           config_fingerprint: str = "") -> EvalReport:
    """Train per fold, summarize and score every test video.

    ``records`` is keyed by qualified id (dataset/video). Test folds
    double as the per-epoch validation set, which yields the best-epoch
    numbers alongside final-epoch ones.
    """
    from .train import evaluate_records, train_model

    report = EvalReport(policy=plan.policy, mode=mode,
                        config_fingerprint=config_fingerprint)
    for fold_idx, (train_ids, test_ids) in enumerate(plan.folds):
        if not test_ids:
            raise ValueError(f"fold {fold_idx} has an empty test set")
        train_recs = [records[v] for v in train_ids]
        test_recs = [records[v] for v in test_ids]
        params, history = train_model(
            train_recs, model_cfg, train_cfg, val_records=test_recs, eval_mode=mode,
            budget_ratio=budget_ratio, max_segments=max_segments,
            penalty_weight=penalty_weight)
        final_f = evaluate_records(test_recs, params, model_cfg, mode=mode,
                                   budget_ratio=budget_ratio, max_segments=max_segments,
                                   penalty_weight=penalty_weight)
        best_epoch = history.best_epoch()
        best_params = params
        if history.best_params is not None:
            from .nn import ParamSet
            best_params = ParamSet.from_arrays(history.best_params)
        best_f = evaluate_records(test_recs, best_params, model_cfg, mode=mode,
                                  budget_ratio=budget_ratio, max_segments=max_segments,
                                  penalty_weight=penalty_weight)
        report.folds.append(FoldResult(
            fold=fold_idx,
            per_video={split_qualified(v)[1]: final_f[i] for i, v in enumerate(test_ids)},
            per_video_best={split_qualified(v)[1]: best_f[i] for i, v in enumerate(test_ids)},
            best_epoch=best_epoch))
    return report
