"""Annotation sidecars.

A clip's annotations live next to it as `<clip>.json` with keys
`user_summaries` (U lists of per-original-frame 0/1) and optionally
`gt_score` (per-original-frame floats in [0, 1]). A clip without a
sidecar gets a single all-zero annotator: valid output, empty ground
truth.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class AnnotationError(ValueError):
    """Sidecar contents do not match the clip."""


def sidecar_path(video_path: str | Path) -> Path:
    return Path(video_path).with_suffix(".json")


def load_annotations(video_path: str | Path,
                     n_frames: int) -> tuple[np.ndarray, np.ndarray | None]:
    path = sidecar_path(video_path)
    if not path.exists():
        log.warning("%s: no annotation sidecar, writing empty ground truth",
                    Path(video_path).name)
        return np.zeros((1, n_frames), dtype=np.uint8), None
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: not valid JSON ({exc})") from None
    users = np.asarray(payload.get("user_summaries", []), dtype=np.float64)
    if users.ndim != 2 or users.shape[0] < 1:
        raise AnnotationError(f"{path}: user_summaries must be a list of per-frame lists")
    if users.shape[1] != n_frames:
        raise AnnotationError(
            f"{path}: annotations cover {users.shape[1]} frames, clip has {n_frames}")
    if not np.all(np.isin(users, (0.0, 1.0))):
        raise AnnotationError(f"{path}: user_summaries must be 0/1")
    gt = None
    if "gt_score" in payload:
        gt = np.asarray(payload["gt_score"], dtype=np.float64)
        if gt.shape != (n_frames,):
            raise AnnotationError(f"{path}: gt_score must have one value per frame")
        if np.any((gt < 0) | (gt > 1)) or not np.all(np.isfinite(gt)):
            raise AnnotationError(f"{path}: gt_score values must lie in [0, 1]")
    return users.astype(np.uint8), gt


def frame_targets(users: np.ndarray, gt: np.ndarray | None,
                  picks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-subsampled-frame binary label and [0, 1] importance score.

    The score is the explicit gt_score when given, otherwise the
    annotator vote share; the label thresholds it at one half.
    """
    score = gt if gt is not None else users.mean(axis=0)
    at_picks = np.clip(score[picks], 0.0, 1.0)
    return (at_picks >= 0.5).astype(np.uint8), at_picks.astype(np.float32)
