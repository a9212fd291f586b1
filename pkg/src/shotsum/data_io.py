"""Dataset container reader/writer, synthetic data, and split plans.

The on-disk layout mirrors the community-standard preprocessed
summarization containers (HDF5, one group per video, fixed key names)
so public datasets drop in unmodified; audio and caption keys are
extensions. Records keep their at-rest dtypes (float32/uint8/int64) so
a write-then-read round trip is bit-exact; the model promotes to double
precision at forward time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import h5py
import numpy as np

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("features", "label", "n_frames", "picks", "user_summary")
MODALITY_KEYS = ("audio_features", "caption_embeddings")


class ContainerFormatError(ValueError):
    """Container contents violate the layout contract."""


class VideoNotFoundError(LookupError):
    """Requested video id is absent from the container."""


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    frame_feats: np.ndarray          # T x N float32
    audio_feats: np.ndarray          # T x M float32
    caption_sent_embeds: np.ndarray  # K x N_c float32
    labels: np.ndarray               # T uint8, binary
    n_frames_original: int
    picks: np.ndarray                # T int64, strictly increasing
    user_summaries: np.ndarray       # U x n_frames_original uint8, binary
    gt_scores: np.ndarray | None = None      # T float32 in [0, 1]
    change_points: np.ndarray | None = None  # n_seg x 2 int64, inclusive

    @property
    def n_subsampled(self) -> int:
        return int(self.frame_feats.shape[0])

    def validate(self) -> None:
        t = self.frame_feats.shape[0]
        if self.frame_feats.ndim != 2:
            raise ContainerFormatError(f"{self.video_id}: features must be 2-D")
        for key, arr, rows in (("audio_features", self.audio_feats, t),
                               ("label", self.labels, t),
                               ("picks", self.picks, t)):
            if arr.shape[0] != rows:
                raise ContainerFormatError(
                    f"{self.video_id}: {key} has {arr.shape[0]} rows, features has {rows}")
        if self.audio_feats.ndim != 2 or self.caption_sent_embeds.ndim != 2:
            raise ContainerFormatError(f"{self.video_id}: modality features must be 2-D")
        if self.caption_sent_embeds.shape[0] < 1:
            raise ContainerFormatError(f"{self.video_id}: caption_embeddings has no rows")
        if self.gt_scores is not None:
            if self.gt_scores.shape[0] != t:
                raise ContainerFormatError(f"{self.video_id}: gtscore length != features rows")
            if np.any((self.gt_scores < 0) | (self.gt_scores > 1)):
                raise ContainerFormatError(f"{self.video_id}: gtscore outside [0, 1]")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ContainerFormatError(f"{self.video_id}: label must be binary")
        if not np.all(np.isin(self.user_summaries, (0, 1))):
            raise ContainerFormatError(f"{self.video_id}: user_summary must be binary")
        if self.user_summaries.ndim != 2 or self.user_summaries.shape[1] != self.n_frames_original:
            raise ContainerFormatError(
                f"{self.video_id}: user_summary must be U x n_frames "
                f"({self.user_summaries.shape} vs {self.n_frames_original})")
        if t > 0 and (np.any(np.diff(self.picks) <= 0)
                      or self.picks[0] < 0 or self.picks[-1] >= self.n_frames_original):
            raise ContainerFormatError(
                f"{self.video_id}: picks must increase strictly within [0, n_frames)")
        if self.change_points is not None:
            cp = self.change_points
            if cp.ndim != 2 or cp.shape[1] != 2:
                raise ContainerFormatError(f"{self.video_id}: change_points must be n x 2")
            if cp[0, 0] != 0 or cp[-1, 1] != self.n_frames_original - 1:
                raise ContainerFormatError(f"{self.video_id}: change_points must tile the video")
            if np.any(cp[1:, 0] != cp[:-1, 1] + 1) or np.any(cp[:, 1] < cp[:, 0]):
                raise ContainerFormatError(
                    f"{self.video_id}: change_points must be contiguous, nonempty")


def write_container(path: str | Path, records: Iterable[VideoRecord]) -> None:
    with h5py.File(path, "w") as f:
        for rec in records:
            rec.validate()
            g = f.create_group(rec.video_id)
            g.create_dataset("features", data=rec.frame_feats.astype(np.float32))
            g.create_dataset("audio_features", data=rec.audio_feats.astype(np.float32))
            g.create_dataset("caption_embeddings",
                             data=rec.caption_sent_embeds.astype(np.float32))
            g.create_dataset("label", data=rec.labels.astype(np.uint8))
            g.create_dataset("n_frames", data=np.int64(rec.n_frames_original))
            g.create_dataset("picks", data=rec.picks.astype(np.int64))
            g.create_dataset("user_summary", data=rec.user_summaries.astype(np.uint8))
            if rec.gt_scores is not None:
                g.create_dataset("gtscore", data=rec.gt_scores.astype(np.float32))
            if rec.change_points is not None:
                g.create_dataset("change_points", data=rec.change_points.astype(np.int64))


def list_video_ids(path: str | Path) -> list[str]:
    with h5py.File(path, "r") as f:
        return sorted(f.keys())


def _read_record(group: h5py.Group, video_id: str, strict: bool,
                 default_audio_dim: int, default_caption_dim: int) -> VideoRecord:
    for key in REQUIRED_KEYS:
        if key not in group:
            raise ContainerFormatError(f"{video_id}: missing required key {key!r}")
    feats = np.asarray(group["features"], dtype=np.float32)
    t = feats.shape[0]
    if "audio_features" in group:
        audio = np.asarray(group["audio_features"], dtype=np.float32)
    elif strict:
        raise ContainerFormatError(f"{video_id}: missing required key 'audio_features'")
    else:
        log.warning("%s: no audio_features; substituting zeros (%d dims)",
                    video_id, default_audio_dim)
        audio = np.zeros((t, default_audio_dim), dtype=np.float32)
    if "caption_embeddings" in group:
        captions = np.asarray(group["caption_embeddings"], dtype=np.float32)
    elif strict:
        raise ContainerFormatError(f"{video_id}: missing required key 'caption_embeddings'")
    else:
        log.warning("%s: no caption_embeddings; substituting a zero row (%d dims)",
                    video_id, default_caption_dim)
        captions = np.zeros((1, default_caption_dim), dtype=np.float32)
    rec = VideoRecord(
        video_id=video_id,
        frame_feats=feats,
        audio_feats=audio,
        caption_sent_embeds=captions,
        labels=np.asarray(group["label"], dtype=np.uint8),
        n_frames_original=int(np.asarray(group["n_frames"])),
        picks=np.asarray(group["picks"], dtype=np.int64),
        user_summaries=np.asarray(group["user_summary"], dtype=np.uint8),
        gt_scores=np.asarray(group["gtscore"], dtype=np.float32) if "gtscore" in group else None,
        change_points=(np.asarray(group["change_points"], dtype=np.int64)
                       if "change_points" in group else None),
    )
    rec.validate()
    return rec


def load_video_record(path: str | Path, video_id: str, strict: bool = False,
                      default_audio_dim: int = 128,
                      default_caption_dim: int = 512) -> VideoRecord:
    with h5py.File(path, "r") as f:
        if video_id not in f:
            raise VideoNotFoundError(f"{video_id} not in {path}")
        return _read_record(f[video_id], video_id, strict,
                            default_audio_dim, default_caption_dim)


def load_container(path: str | Path, strict: bool = False, default_audio_dim: int = 128,
                   default_caption_dim: int = 512) -> dict[str, VideoRecord]:
    out: dict[str, VideoRecord] = {}
    with h5py.File(path, "r") as f:
        for video_id in sorted(f.keys()):
            out[video_id] = _read_record(f[video_id], video_id, strict,
                                         default_audio_dim, default_caption_dim)
    return out


SUBSAMPLE_STEP = 15  # original frames per subsampled frame in synthetic data


def make_synthetic_record(seed: int, t: int, n: int, m: int, k: int, u: int,
                          caption_dim: int = 16) -> VideoRecord:
    """Deterministic toy video: 2-4 planted feature-shifted events on a
    noise background, labels marking the events, annotators agreeing up
    to one-block boundary jitter.

    Event frames total 15% of T, exactly filling the default selection
    budget so an ideal scorer leaves no room for filler segments.
    """
    if min(t, n, m, k, u) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    n_events = min(int(rng.integers(2, 5)), max(1, (t - 2) // 4))
    budget = max(n_events, int(0.15 * t))

    # Sizes per event, then gaps: one before each event (>= 2 between
    # events so segments stay separable) and one after the last.
    sizes = np.full(n_events, budget // n_events)
    sizes[:budget % n_events] += 1
    min_gaps = np.array([1] + [2] * (n_events - 1) + [1])
    slack = t - budget - min_gaps.sum()
    if slack < 0:
        raise ValueError(f"t={t} too short for {n_events} events of total {budget}")
    extra = rng.multinomial(slack, np.full(n_events + 1, 1.0 / (n_events + 1)))
    gaps = min_gaps + extra

    labels = np.zeros(t, dtype=np.uint8)
    events: list[tuple[int, int]] = []
    cursor = 0
    for size, gap in zip(sizes, gaps[:-1]):
        start = cursor + gap
        events.append((int(start), int(start + size)))
        labels[start:start + size] = 1
        cursor = start + size

    def shifted(width: int, norm: float) -> np.ndarray:
        base = rng.standard_normal((t, width))
        # One fixed shift direction shared by all events and videos: the
        # classes stay linearly separable, so small models can memorize
        # the set and even generalize across synthetic videos.
        direction = np.random.default_rng(width).standard_normal(width)
        direction *= norm / np.linalg.norm(direction)
        for lo, hi in events:
            base[lo:hi] += direction
        return base.astype(np.float32)

    # Shift well above the noise scale (row norm ~ sqrt(n)) so kernel
    # segmentation recovers the event boundaries exactly.
    frame_feats = shifted(n, 8.0)
    audio_feats = shifted(m, 4.0)
    captions = rng.standard_normal((k, caption_dim)).astype(np.float32)
    gt_scores = np.clip(0.85 * labels + 0.05 + 0.05 * rng.standard_normal(t),
                        0.0, 1.0).astype(np.float32)

    n_original = SUBSAMPLE_STEP * t
    picks = (SUBSAMPLE_STEP * np.arange(t)).astype(np.int64)

    # Original frame -> nearest pick, ties to the lower index: the same
    # assignment the scorer uses, so exact frame scores can reach F = 1.
    nearest_pick = np.minimum(
        (np.arange(n_original) + SUBSAMPLE_STEP // 2) // SUBSAMPLE_STEP, t - 1)

    def expand(mask_sub: np.ndarray) -> np.ndarray:
        return mask_sub.astype(np.uint8)[nearest_pick]

    summaries = [expand(labels)]
    for _ in range(1, u):
        jittered = np.zeros(t, dtype=np.uint8)
        for lo, hi in events:
            jlo = int(np.clip(lo + rng.integers(-1, 2), 0, t - 1))
            jhi = int(np.clip(hi + rng.integers(-1, 2), jlo + 1, t))
            jittered[jlo:jhi] = 1
        summaries.append(expand(jittered))
    user_summaries = np.stack(summaries)

    rec = VideoRecord(
        video_id=f"video_{seed}", frame_feats=frame_feats, audio_feats=audio_feats,
        caption_sent_embeds=captions, labels=labels, n_frames_original=n_original,
        picks=picks, user_summaries=user_summaries, gt_scores=gt_scores)
    rec.validate()
    return rec


def make_synthetic_container(path: str | Path, videos: int, t: int, n: int, m: int,
                             k: int, u: int, seed: int = 0, caption_dim: int = 16) -> list[str]:
    records = [make_synthetic_record(seed + i, t, n, m, k, u, caption_dim)
               for i in range(videos)]
    # video_id carries the seed; rename to a dense index for the container
    records = [replace(rec, video_id=f"video_{i}") for i, rec in enumerate(records)]
    write_container(path, records)
    return [rec.video_id for rec in records]


# ---------------------------------------------------------------------------
# split plans

SPLIT_POLICIES = ("standard", "augment", "transfer")


@dataclass(frozen=True)
class SplitPlan:
    policy: str
    target: str
    seed: int
    folds: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]  # (train, test) pairs

    def to_text(self) -> str:
        lines = [f"policy={self.policy}", f"target={self.target}", f"seed={self.seed}"]
        for i, (train, test) in enumerate(self.folds):
            lines.append(f"fold{i}.train=" + ",".join(train))
            lines.append(f"fold{i}.test=" + ",".join(test))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SplitPlan":
        policy = target = ""
        seed = 0
        trains: dict[int, tuple[str, ...]] = {}
        tests: dict[int, tuple[str, ...]] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            if key == "policy":
                policy = value
            elif key == "target":
                target = value
            elif key == "seed":
                seed = int(value)
            elif key.startswith("fold"):
                idx_str, _, which = key[4:].partition(".")
                ids = tuple(v for v in value.split(",") if v)
                if which == "train":
                    trains[int(idx_str)] = ids
                elif which == "test":
                    tests[int(idx_str)] = ids
        folds = tuple((trains[i], tests[i]) for i in sorted(trains))
        return cls(policy=policy, target=target, seed=seed, folds=folds)


def qualify(dataset: str, video_id: str) -> str:
    return f"{dataset}/{video_id}"


def split_qualified(qualified_id: str) -> tuple[str, str]:
    dataset, _, video_id = qualified_id.partition("/")
    return dataset, video_id


def make_splits(dataset_ids: Mapping[str, Sequence[str]], target: str, policy: str,
                n_folds: int, seed: int) -> SplitPlan:
    """Fold plans for the three evaluation settings.

    standard: k-fold partition of the target; train on the rest of it.
    augment: standard, with every other dataset added to each train set.
    transfer: one fold; train entirely on other datasets, test on all of
    the target.
    """
    if policy not in SPLIT_POLICIES:
        raise ValueError(f"policy must be one of {SPLIT_POLICIES}, got {policy!r}")
    if target not in dataset_ids:
        raise ValueError(f"target dataset {target!r} not provided")
    target_ids = [qualify(target, v) for v in sorted(dataset_ids[target])]
    other_ids = [qualify(ds, v) for ds in sorted(dataset_ids) if ds != target
                 for v in sorted(dataset_ids[ds])]

    if policy == "transfer":
        if not other_ids:
            raise ValueError("transfer policy needs at least one non-target dataset")
        return SplitPlan(policy, target, seed,
                         folds=((tuple(other_ids), tuple(target_ids)),))

    if n_folds < 2:
        raise ValueError(f"n_folds must be >= 2, got {n_folds}")
    if len(target_ids) < n_folds:
        raise ValueError(
            f"target {target!r} has {len(target_ids)} videos, fewer than {n_folds} folds")
    rng = np.random.default_rng(seed)
    order = [target_ids[i] for i in rng.permutation(len(target_ids))]
    folds = []
    for chunk in np.array_split(np.arange(len(order)), n_folds):
        test = tuple(order[i] for i in chunk)
        train = tuple(v for v in target_ids if v not in set(test))
        if policy == "augment":
            train = train + tuple(other_ids)
        folds.append((train, test))
    return SplitPlan(policy, target, seed, folds=tuple(folds))
