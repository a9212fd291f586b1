"""Lightweight local embedders, keyed by id@version.

These are deterministic statistical feature projections, not pretrained
networks: each backbone derives a fixed random projection from its own
id and version, so re-running extraction always reproduces the same
features and a version bump changes them. Real backbones can be added
to the registry behind the same interface.
"""

from __future__ import annotations

import hashlib

import cv2
import numpy as np


class BackboneError(RuntimeError):
    """Requested backbone cannot be resolved or constructed."""


def _seed_from(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little")


def _projection(tag: str, out_dim: int, in_dim: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_seed_from(tag))
    w = rng.standard_normal((out_dim, in_dim)) / np.sqrt(in_dim)
    b = rng.standard_normal(out_dim) * 0.01
    return w, b


def _l2_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, 1e-12)


class FrameStatEmbedder:
    """Per-frame color/layout statistics projected to a 1024-d row."""

    dim = 1024
    _stat_dim = 3 + 3 + 16 + 16   # channel means, stds, luma hist, 4x4 grid

    def __init__(self, version: str):
        self.version = version
        self._w, self._b = _projection(f"framestat-1024@{version}",
                                       self.dim, self._stat_dim)

    def _stats(self, frame: np.ndarray) -> np.ndarray:
        img = frame.astype(np.float64)
        gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY).astype(np.float64)
        hist, _ = np.histogram(gray, bins=16, range=(0.0, 256.0))
        grid = cv2.resize(gray, (4, 4), interpolation=cv2.INTER_AREA)
        return np.concatenate([
            img.mean(axis=(0, 1)) / 255.0,
            img.std(axis=(0, 1)) / 255.0,
            hist / gray.size,
            grid.reshape(-1) / 255.0,
        ])

    def embed(self, frames: list[np.ndarray]) -> np.ndarray:
        stats = np.stack([self._stats(f) for f in frames])
        return _l2_rows(np.tanh(stats @ self._w.T + self._b)).astype(np.float32)


class AudioStatEmbedder:
    """Windowed waveform statistics projected to a 128-d row."""

    dim = 128
    window_s = 0.96
    hop_s = 0.48
    _stat_dim = 1 + 1 + 1 + 24   # rms, zero crossings, centroid, log spectrum

    def __init__(self, version: str):
        self.version = version
        self._w, self._b = _projection(f"audiostat-128@{version}",
                                       self.dim, self._stat_dim)

    def _stats(self, window: np.ndarray) -> np.ndarray:
        spectrum = np.abs(np.fft.rfft(window))
        bins = np.array_split(spectrum, 24)
        pooled = np.log1p(np.array([b.mean() if b.size else 0.0 for b in bins]))
        total = spectrum.sum()
        centroid = float((spectrum * np.arange(spectrum.size)).sum() / total) \
            if total > 0 else 0.0
        rms = float(np.sqrt(np.mean(window ** 2)))
        zcr = float(np.mean(np.abs(np.diff(np.signbit(window)))))
        return np.concatenate([[rms, zcr, centroid / max(spectrum.size, 1)], pooled])

    def embed_window(self, window: np.ndarray) -> np.ndarray:
        feats = np.tanh(self._stats(window.astype(np.float64)) @ self._w.T + self._b)
        return _l2_rows(feats[None, :])[0].astype(np.float32)

    def silence_row(self, sr: int) -> np.ndarray:
        return self.embed_window(np.zeros(int(self.window_s * sr)))


class CaptionGenerator:
    """One template sentence per detected scene."""

    max_sentences = 16
    _tones = ((60.0, "dark"), (120.0, "dim"), (190.0, "bright"),
              (float("inf"), "glaring"))

    def __init__(self, version: str):
        self.version = version

    def _tone(self, luma: float) -> str:
        for ceiling, word in self._tones:
            if luma < ceiling:
                return word
        return self._tones[-1][1]

    def generate(self, scene_lumas: list[float], scene_seconds: list[float]) -> list[str]:
        sentences = [
            f"scene {i + 1} of {len(scene_lumas)}: a {self._tone(luma)} segment "
            f"lasting {seconds:.1f} seconds"
            for i, (luma, seconds) in enumerate(zip(scene_lumas, scene_seconds))
        ]
        return sentences[:self.max_sentences] or ["an empty clip"]


class SentenceEncoder:
    """Hashing bag-of-words encoder to 512-d, deterministic per token."""

    dim = 512

    def __init__(self, version: str):
        self.version = version
        self._cache: dict[str, np.ndarray] = {}

    def _token_vec(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = np.random.default_rng(_seed_from(f"hashenc-512@{self.version}:{token}"))
            vec = rng.standard_normal(self.dim)
            self._cache[token] = vec
        return vec

    def encode(self, sentences: list[str]) -> np.ndarray:
        rows = []
        for sentence in sentences:
            tokens = sentence.lower().split()
            rows.append(np.mean([self._token_vec(t) for t in tokens], axis=0)
                        if tokens else np.zeros(self.dim))
        return _l2_rows(np.stack(rows)).astype(np.float32)


_REGISTRY = {
    "framestat-1024": (FrameStatEmbedder, ("1",)),
    "audiostat-128": (AudioStatEmbedder, ("1",)),
    "scenecap": (CaptionGenerator, ("1",)),
    "hashenc-512": (SentenceEncoder, ("1",)),
}


def get_backbone(spec: str):
    """Resolve an id@version string against the registry."""
    name, sep, version = spec.partition("@")
    if not sep or not version:
        raise BackboneError(f"backbone spec must be id@version, got {spec!r}")
    entry = _REGISTRY.get(name)
    if entry is None:
        raise BackboneError(f"unknown backbone {name!r}")
    cls, versions = entry
    if version not in versions:
        raise BackboneError(f"backbone {name!r} has no version {version!r} "
                            f"(available: {', '.join(versions)})")
    return cls(version)
