"""From frame scores to a final summary.

Kernel temporal segmentation finds content-driven shot boundaries on
the subsampled features, frame scores are lifted back to the original
timeline through the picks, each segment is scored by its mean, and an
exact 0/1 knapsack selects segments under a 15% length budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Segmentation:
    """Inclusive [start, end] original-frame pairs tiling the video."""

    change_points: np.ndarray  # n_seg x 2 int64
    n_frames_original: int

    @property
    def n_segments(self) -> int:
        return int(self.change_points.shape[0])

    def frame_counts(self) -> np.ndarray:
        return self.change_points[:, 1] - self.change_points[:, 0] + 1

    def validate(self) -> None:
        cp = self.change_points
        if cp.ndim != 2 or cp.shape[1] != 2 or cp.shape[0] < 1:
            raise ValueError("change points must be a nonempty n x 2 array")
        if cp[0, 0] != 0 or cp[-1, 1] != self.n_frames_original - 1:
            raise ValueError("segments must tile the whole video")
        if np.any(cp[:, 1] < cp[:, 0]) or np.any(cp[1:, 0] != cp[:-1, 1] + 1):
            raise ValueError("segments must be nonempty, contiguous, non-overlapping")


@dataclass(frozen=True)
class Summary:
    selected_segments: tuple[int, ...]
    frame_mask: np.ndarray  # n_frames_original uint8
    budget_ratio: float

    def to_json(self, segmentation: Segmentation, segment_scores: np.ndarray,
                extra: dict | None = None) -> str:
        payload = {
            "selected_segments": list(self.selected_segments),
            "budget_ratio": self.budget_ratio,
            "summary_frames": int(self.frame_mask.sum()),
            "total_frames": int(self.frame_mask.shape[0]),
            "segments": [
                {"index": i, "start": int(lo), "end": int(hi),
                 "score": float(segment_scores[i]),
                 "selected": i in self.selected_segments}
                for i, (lo, hi) in enumerate(segmentation.change_points)
            ],
            "mask_rle": mask_run_lengths(self.frame_mask),
        }
        if extra:
            payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)


def mask_run_lengths(mask: np.ndarray) -> list[list[int]]:
    """[start, length] runs of ones, for compact mask export."""
    runs = []
    start = None
    for i, bit in enumerate(mask):
        if bit and start is None:
            start = i
        elif not bit and start is not None:
            runs.append([start, i - start])
            start = None
    if start is not None:
        runs.append([start, len(mask) - start])
    return runs


# ---------------------------------------------------------------------------
# kernel temporal segmentation


def _scatter_table(features: np.ndarray) -> np.ndarray:
    """J[a, b] = within-segment scatter of frames a..b inclusive, via the
    linear kernel: sum of diagonal minus block mean of the Gram matrix."""
    t = features.shape[0]
    gram = features @ features.T
    diag_cum = np.concatenate([[0.0], np.cumsum(np.diag(gram))])
    # Integral image for block sums of the Gram matrix.
    block = np.zeros((t + 1, t + 1))
    block[1:, 1:] = np.cumsum(np.cumsum(gram, axis=0), axis=1)
    scatter = np.full((t, t), np.inf)
    for a in range(t):
        for b in range(a, t):
            length = b - a + 1
            total = block[b + 1, b + 1] - block[a, b + 1] - block[b + 1, a] + block[a, a]
            scatter[a, b] = (diag_cum[b + 1] - diag_cum[a]) - total / length
    return scatter


def kts_costs(features: np.ndarray, max_segments: int) -> tuple[np.ndarray, list[list[int]]]:
    """Optimal scatter for 0..max_segments change points, with boundaries.

    dp[m][t] = best scatter for frames 0..t-1 split by m change points.
    Returns (costs[m], boundaries[m]) where boundaries are the first
    indices of segments 2..m+1 in subsampled coordinates.
    """
    t = features.shape[0]
    if t < 2:
        raise ValueError(f"need at least 2 frames to segment, got {t}")
    if max_segments >= t:
        raise ValueError(f"max_segments {max_segments} must be < frame count {t}")
    scatter = _scatter_table(features)
    dp = np.full((max_segments + 1, t + 1), np.inf)
    arg = np.zeros((max_segments + 1, t + 1), dtype=np.intp)
    dp[0, 1:] = scatter[0, :]
    for m in range(1, max_segments + 1):
        for end in range(m + 1, t + 1):
            # last segment is frames s..end-1; earlier part has m-1 points
            cands = dp[m - 1, m:end] + scatter[m:end, end - 1]
            best = int(np.argmin(cands))
            dp[m, end] = cands[best]
            arg[m, end] = best + m
    costs = dp[:, t].copy()
    boundaries: list[list[int]] = []
    for m in range(max_segments + 1):
        if not np.isfinite(costs[m]):
            boundaries.append([])
            continue
        cuts = []
        end = t
        for mm in range(m, 0, -1):
            start = int(arg[mm, end])
            cuts.append(start)
            end = start
        boundaries.append(sorted(cuts))
    return costs, boundaries


def segment_count_penalty(t: int, m: int, weight: float) -> float:
    """Model-complexity penalty; zero change points cost nothing."""
    if m == 0:
        return 0.0
    return weight * m * (np.log(t / m) + 1.0)


def kts_boundaries(features: np.ndarray, max_segments: int,
                   penalty_weight: float = 1.0) -> list[int]:
    """Change points (subsampled coordinates) minimizing scatter + penalty."""
    costs, boundaries = kts_costs(features, max_segments)
    t = features.shape[0]
    penalized = [costs[m] + segment_count_penalty(t, m, penalty_weight)
                 for m in range(max_segments + 1)]
    best_m = int(np.argmin(penalized))
    return boundaries[best_m]


def segmentation_from_boundaries(boundaries: Sequence[int], picks: np.ndarray,
                                 n_frames_original: int) -> Segmentation:
    """Map subsampled cut indices to original frames via pick midpoints."""
    edges = [0]
    for cut in boundaries:
        edges.append(int((picks[cut - 1] + picks[cut]) // 2) + 1)
    edges.append(n_frames_original)
    pairs = np.array([[edges[i], edges[i + 1] - 1] for i in range(len(edges) - 1)],
                     dtype=np.int64)
    seg = Segmentation(change_points=pairs, n_frames_original=n_frames_original)
    seg.validate()
    return seg


def kts_segment(features: np.ndarray, picks: np.ndarray, n_frames_original: int,
                max_segments: int = 0, penalty_weight: float = 1.0) -> Segmentation:
    t = features.shape[0]
    if max_segments <= 0:
        max_segments = max(1, min(t - 1, t // 10))
    cuts = kts_boundaries(np.asarray(features, dtype=np.float64),
                          max_segments, penalty_weight)
    return segmentation_from_boundaries(cuts, picks, n_frames_original)


# ---------------------------------------------------------------------------
# scoring, selection, assembly


def frame_scores_to_original(frame_scores: np.ndarray, picks: np.ndarray,
                             n_frames_original: int) -> np.ndarray:
    """Every original frame inherits the score of its nearest pick."""
    picks = np.asarray(picks)
    positions = np.arange(n_frames_original)
    right = np.searchsorted(picks, positions, side="left")
    right = np.clip(right, 0, len(picks) - 1)
    left = np.clip(right - 1, 0, len(picks) - 1)
    pick_left = picks[left]
    pick_right = picks[right]
    choose_left = np.abs(positions - pick_left) <= np.abs(pick_right - positions)
    nearest = np.where(choose_left, left, right)
    return np.asarray(frame_scores)[nearest]


def shot_scores(frame_scores: np.ndarray, segmentation: Segmentation,
                picks: np.ndarray) -> np.ndarray:
    """Mean per-segment score over original frames."""
    expanded = frame_scores_to_original(frame_scores, picks,
                                        segmentation.n_frames_original)
    return np.array([expanded[lo:hi + 1].mean()
                     for lo, hi in segmentation.change_points])


def knapsack_select(values: Sequence[float], weights: Sequence[int],
                    capacity: int) -> tuple[int, ...]:
    """Exact 0/1 knapsack; ties broken toward the lexicographically
    smallest index set by scanning items in ascending order and
    preferring inclusion whenever it stays optimal."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.int64)
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    n = len(values)
    # dp[i][c] = best achievable value using items i.. with capacity c
    dp = np.zeros((n + 1, capacity + 1))
    for i in range(n - 1, -1, -1):
        dp[i] = dp[i + 1]
        w = int(weights[i])
        if w <= capacity:
            take = values[i] + dp[i + 1, :capacity - w + 1]
            dp[i, w:] = np.maximum(dp[i + 1, w:], take)
    chosen = []
    c = capacity
    for i in range(n):
        w = int(weights[i])
        if w <= c and values[i] + dp[i + 1, c - w] >= dp[i + 1, c]:
            chosen.append(i)
            c -= w
    return tuple(chosen)


def build_summary(selected: Sequence[int], segmentation: Segmentation,
                  budget_ratio: float = 0.15) -> Summary:
    mask = np.zeros(segmentation.n_frames_original, dtype=np.uint8)
    budget = int(budget_ratio * segmentation.n_frames_original)
    total = 0
    for idx in selected:
        lo, hi = segmentation.change_points[idx]
        mask[lo:hi + 1] = 1
        total += int(hi - lo + 1)
    if total > budget:
        raise ValueError(f"selection of {total} frames exceeds budget {budget}")
    return Summary(selected_segments=tuple(selected), frame_mask=mask,
                   budget_ratio=budget_ratio)


def summarize_scores(frame_scores: np.ndarray, segmentation: Segmentation,
                     picks: np.ndarray, budget_ratio: float = 0.15) -> tuple[Summary, np.ndarray]:
    """Score segments, select under the budget, and assemble the mask."""
    seg_scores = shot_scores(frame_scores, segmentation, picks)
    weights = segmentation.frame_counts()
    capacity = int(budget_ratio * segmentation.n_frames_original)
    selected = knapsack_select(seg_scores, weights, capacity)
    return build_summary(selected, segmentation, budget_ratio), seg_scores


def record_segmentation(record, max_segments: int = 0,
                        penalty_weight: float = 1.0) -> Segmentation:
    """Precomputed change points when the record has them, else KTS."""
    if record.change_points is not None:
        seg = Segmentation(change_points=np.asarray(record.change_points, dtype=np.int64),
                           n_frames_original=record.n_frames_original)
        seg.validate()
        return seg
    return kts_segment(record.frame_feats, record.picks, record.n_frames_original,
                       max_segments, penalty_weight)
