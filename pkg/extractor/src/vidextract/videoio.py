"""Video decoding, frame-rate subsampling, and scene cuts."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

log = logging.getLogger(__name__)


class VideoReadError(RuntimeError):
    """Clip is missing, corrupt, or yields no frames."""


@dataclass(frozen=True)
class DecodedVideo:
    path: Path
    fps: float
    n_frames: int
    luma: np.ndarray              # per original frame, float64
    kept_indices: np.ndarray      # original indices of the subsampled frames
    kept_frames: list[np.ndarray]

    @property
    def frame_times(self) -> np.ndarray:
        return self.kept_indices / self.fps

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps


def keep_frame(index: int, src_fps: float, target_fps: float) -> bool:
    """First frame of each target-rate window; all frames once the
    target rate meets the source rate."""
    ratio = target_fps / src_fps
    if ratio >= 1.0:
        return True
    return index == 0 or math.floor(index * ratio) > math.floor((index - 1) * ratio)


def decode_video(path: str | Path, target_fps: float) -> DecodedVideo:
    path = Path(path)
    if not path.exists():
        raise VideoReadError(f"video not found: {path}")
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoReadError(f"cannot open video: {path}")
    fps = cap.get(cv2.CAP_PROP_FPS)
    if not fps or fps <= 0 or not math.isfinite(fps):
        log.warning("%s: no frame rate in header, assuming 30 fps", path.name)
        fps = 30.0
    luma: list[float] = []
    kept_indices: list[int] = []
    kept_frames: list[np.ndarray] = []
    index = 0
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        luma.append(float(cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY).mean()))
        if keep_frame(index, fps, target_fps):
            kept_indices.append(index)
            kept_frames.append(frame)
        index += 1
    cap.release()
    if index == 0:
        raise VideoReadError(f"no decodable frames: {path}")
    return DecodedVideo(path=path, fps=fps, n_frames=index,
                        luma=np.asarray(luma),
                        kept_indices=np.asarray(kept_indices, dtype=np.int64),
                        kept_frames=kept_frames)


def scene_change_points(luma: np.ndarray, fps: float,
                        mad_scale: float = 10.0, floor: float = 4.0,
                        min_scene_s: float = 0.25) -> np.ndarray:
    """Inclusive [start, end] segments tiling the clip, cut where the
    mean-luma jump clears the typical frame-to-frame level (median plus
    scaled MAD, robust to the cuts themselves) and an absolute floor
    (codec noise on static scenes sits well under it)."""
    n = luma.shape[0]
    if n < 2:
        return np.array([[0, max(n - 1, 0)]], dtype=np.int64)
    jumps = np.abs(np.diff(luma))
    med = float(np.median(jumps))
    mad = float(np.median(np.abs(jumps - med)))
    threshold = max(med + mad_scale * mad, floor)
    min_gap = max(1, int(round(min_scene_s * fps)))
    cuts: list[int] = []
    for k in np.flatnonzero(jumps > threshold):
        cut = int(k) + 1
        if not cuts or cut - cuts[-1] >= min_gap:
            cuts.append(cut)
    edges = [0, *cuts, n]
    return np.array([[edges[i], edges[i + 1] - 1] for i in range(len(edges) - 1)],
                    dtype=np.int64)
