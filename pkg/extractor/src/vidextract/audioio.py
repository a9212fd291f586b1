"""Audio decoding and frame-aligned embedding rows.

Decoding shells out to ffmpeg when it is installed; clips without a
usable audio stream (or hosts without ffmpeg) fall back to the
embedder's silence row, so the output always has one finite row per
subsampled frame.
"""

from __future__ import annotations

import logging
import shutil
import subprocess
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

SAMPLE_RATE = 16000


def read_pcm(path: str | Path, sr: int = SAMPLE_RATE) -> np.ndarray | None:
    """Mono float32 waveform, or None when no audio can be decoded."""
    if shutil.which("ffmpeg") is None:
        log.warning("%s: ffmpeg not available, treating audio as silent",
                    Path(path).name)
        return None
    proc = subprocess.run(
        ["ffmpeg", "-v", "error", "-i", str(path), "-f", "f32le",
         "-ac", "1", "-ar", str(sr), "pipe:1"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    if proc.returncode != 0 or not proc.stdout:
        log.warning("%s: no decodable audio stream, treating as silent",
                    Path(path).name)
        return None
    return np.frombuffer(proc.stdout, dtype=np.float32)


def window_starts(n_samples: int, sr: int, window_s: float, hop_s: float) -> np.ndarray:
    win = int(window_s * sr)
    hop = max(1, int(hop_s * sr))
    if n_samples <= win:
        return np.array([0], dtype=np.int64)
    return np.arange(0, n_samples - win + 1, hop, dtype=np.int64)


def audio_rows(pcm: np.ndarray | None, sr: int, frame_times: np.ndarray,
               embedder) -> np.ndarray:
    """One embedding row per frame time, from the nearest audio window."""
    t = frame_times.shape[0]
    if pcm is None or pcm.size == 0:
        return np.tile(embedder.silence_row(sr), (t, 1))
    win = int(embedder.window_s * sr)
    starts = window_starts(pcm.size, sr, embedder.window_s, embedder.hop_s)
    windows = np.zeros((starts.size, win))
    for i, s in enumerate(starts):
        chunk = pcm[s:s + win]
        windows[i, :chunk.size] = chunk
    rows = np.stack([embedder.embed_window(w) for w in windows])
    centers = (starts + win / 2.0) / sr
    nearest = np.abs(centers[None, :] - frame_times[:, None]).argmin(axis=1)
    return rows[nearest]
