"""Manifest-driven extraction into the dataset container layout.

Each video becomes one HDF5 group with the standard keys (features,
audio_features, caption_embeddings, label, n_frames, picks,
user_summary, gtscore, change_points). Per-video failures are collected
and reported; the run continues and writes every video that succeeded.
Extraction fans out over a worker pool, container writes stay on the
calling thread because HDF5 handles are not thread safe.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import h5py
import numpy as np

from . import audioio
from .annotations import AnnotationError, frame_targets, load_annotations
from .backbones import BackboneError, get_backbone
from .manifest import ExtractionManifest
from .videoio import VideoReadError, decode_video, scene_change_points

log = logging.getLogger(__name__)


@dataclass
class ExtractionReport:
    output: Path
    extracted: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors and bool(self.extracted)


@dataclass(frozen=True)
class _Backbones:
    frame: object
    audio: object
    caption: object
    encoder: object


def extract_video(path: Path, manifest: ExtractionManifest,
                  backbones: _Backbones) -> dict[str, np.ndarray]:
    video = decode_video(path, manifest.subsample_fps)
    users, gt = load_annotations(path, video.n_frames)
    labels, gtscore = frame_targets(users, gt, video.kept_indices)
    change_points = scene_change_points(video.luma, video.fps)

    features = backbones.frame.embed(video.kept_frames)
    pcm = audioio.read_pcm(path)
    audio = audioio.audio_rows(pcm, audioio.SAMPLE_RATE, video.frame_times,
                               backbones.audio)

    scene_lumas = [float(video.luma[lo:hi + 1].mean()) for lo, hi in change_points]
    scene_seconds = [(hi - lo + 1) / video.fps for lo, hi in change_points]
    sentences = backbones.caption.generate(scene_lumas, scene_seconds)
    captions = backbones.encoder.encode(sentences)

    return {
        "features": features,
        "audio_features": audio.astype(np.float32),
        "caption_embeddings": captions,
        "label": labels,
        "n_frames": np.int64(video.n_frames),
        "picks": video.kept_indices,
        "user_summary": users,
        "gtscore": gtscore,
        "change_points": change_points,
    }


def extract(manifest: ExtractionManifest, workers: int = 1) -> ExtractionReport:
    report = ExtractionReport(output=Path(manifest.output))
    try:
        backbones = _Backbones(frame=get_backbone(manifest.frame_backbone),
                               audio=get_backbone(manifest.audio_backbone),
                               caption=get_backbone(manifest.caption_backbone),
                               encoder=get_backbone(manifest.sentence_encoder))
    except BackboneError as exc:
        backbones = None
        for path in manifest.videos:
            report.errors[path.stem] = str(exc)

    jobs: list[tuple[str, Path]] = []
    seen: set[str] = set()
    if backbones is not None:
        for path in manifest.videos:
            vid = path.stem
            if vid in seen:
                report.errors[vid] = f"duplicate video id {vid!r} ({path})"
                continue
            seen.add(vid)
            jobs.append((vid, path))

    def run(job: tuple[str, Path]):
        vid, path = job
        try:
            return vid, extract_video(path, manifest, backbones), None
        except (VideoReadError, AnnotationError, BackboneError) as exc:
            return vid, None, str(exc)

    report.output.parent.mkdir(parents=True, exist_ok=True)
    with h5py.File(report.output, "w") as container:
        container.attrs["subsample_fps"] = manifest.subsample_fps
        for key in ("frame_backbone", "audio_backbone", "caption_backbone",
                    "sentence_encoder"):
            container.attrs[key] = getattr(manifest, key)
        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = pool.map(run, jobs)
                for vid, payload, error in results:
                    _finish(container, report, vid, payload, error)
        else:
            for job in jobs:
                vid, payload, error = run(job)
                _finish(container, report, vid, payload, error)
    return report


def _finish(container: h5py.File, report: ExtractionReport, vid: str,
            payload: dict | None, error: str | None) -> None:
    if error is not None:
        log.error("%s: %s", vid, error)
        report.errors[vid] = error
        return
    group = container.create_group(vid)
    for key, value in payload.items():
        group.create_dataset(key, data=value)
    report.extracted.append(vid)
    log.info("%s: %d frames kept, %d captions", vid,
             payload["features"].shape[0], payload["caption_embeddings"].shape[0])
