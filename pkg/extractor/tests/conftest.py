"""Shared clip and sidecar builders for the extractor tests."""

import json
from pathlib import Path

import cv2
import numpy as np


def write_clip(path, n_frames, events=(), bg_cuts=(), bg_levels=(35, 55),
               fps=30.0, size=(48, 32), seed=0):
    """Tiny MJPG clip: uniform-noise background with a bright static
    square during each event. ``bg_cuts`` switches the background level
    mid-clip so scenes exist outside the events too. Frames within one
    scene are byte-identical, so scene cuts are unambiguous.

    Returns the per-original-frame event mask.
    """
    rng = np.random.default_rng(seed)
    w, h = size
    sections = [0, *sorted(bg_cuts), n_frames]
    backgrounds = {}
    for i in range(len(sections) - 1):
        level = bg_levels[i % len(bg_levels)]
        backgrounds[sections[i]] = rng.integers(
            level - 12, level + 12, (h, w, 3)).astype(np.uint8)
    section_starts = sorted(backgrounds)

    event_frames = {}
    mask = np.zeros(n_frames, dtype=np.uint8)
    for e, (lo, hi) in enumerate(events):
        x = (5 + e * 13) % (w - 16)
        y = (3 + e * 7) % (h - 16)
        event_frames[(lo, hi)] = (x, y)
        mask[lo:hi] = 1

    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"),
                             fps, (w, h))
    assert writer.isOpened(), path
    for k in range(n_frames):
        start = max(s for s in section_starts if s <= k)
        frame = backgrounds[start]
        for (lo, hi), (x, y) in event_frames.items():
            if lo <= k < hi:
                frame = frame.copy()
                frame[y:y + 16, x:x + 16] = 225
                break
        writer.write(frame)
    writer.release()
    return mask


def shift_mask(mask, shift):
    out = np.zeros_like(mask)
    if shift >= 0:
        out[shift:] = mask[:mask.size - shift]
    else:
        out[:shift] = mask[-shift:]
    return out


def write_sidecar(video_path, mask, users=3, seed=0, max_shift=3, with_gt=True):
    """Annotator panel: user 0 marks the events exactly, the rest agree
    up to a few frames of boundary shift."""
    rng = np.random.default_rng(seed)
    rows = [mask]
    for _ in range(users - 1):
        rows.append(shift_mask(mask, int(rng.integers(-max_shift, max_shift + 1))))
    payload = {"user_summaries": [row.astype(int).tolist() for row in rows]}
    if with_gt:
        payload["gt_score"] = mask.astype(float).tolist()
    sidecar = Path(video_path).with_suffix(".json")
    sidecar.write_text(json.dumps(payload))
    return sidecar
