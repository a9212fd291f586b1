"""Extraction manifests.

A manifest is a flat text file of key=value lines: `output` names the
container to write, `subsample_fps` the target frame rate, the four
backbone keys pick embedders by id@version, and each `video=` line adds
one input clip. `#` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ManifestError(ValueError):
    """Manifest text violates the format."""


@dataclass(frozen=True)
class ExtractionManifest:
    videos: tuple[Path, ...]
    output: Path
    subsample_fps: float = 2.0
    frame_backbone: str = "framestat-1024@1"
    audio_backbone: str = "audiostat-128@1"
    caption_backbone: str = "scenecap@1"
    sentence_encoder: str = "hashenc-512@1"

    def __post_init__(self):
        if not self.videos:
            raise ManifestError("manifest lists no videos")
        if self.subsample_fps <= 0:
            raise ManifestError(f"subsample_fps must be positive, got {self.subsample_fps}")

    def to_text(self) -> str:
        lines = [f"output={self.output}", f"subsample_fps={self.subsample_fps}"]
        for key in ("frame_backbone", "audio_backbone", "caption_backbone",
                    "sentence_encoder"):
            lines.append(f"{key}={getattr(self, key)}")
        lines.extend(f"video={v}" for v in self.videos)
        return "\n".join(lines) + "\n"


_SCALAR_KEYS = {f.name for f in fields(ExtractionManifest)} - {"videos"}


def parse_manifest(path: str | Path) -> ExtractionManifest:
    videos: list[Path] = []
    scalars: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "video":
            videos.append(Path(value))
        elif key in _SCALAR_KEYS:
            if key in scalars:
                raise ManifestError(f"{path}:{lineno}: duplicate key {key!r}")
            scalars[key] = value
        else:
            raise ManifestError(f"{path}:{lineno}: unknown key {key!r}")
    if "output" not in scalars:
        raise ManifestError(f"{path}: missing required key 'output'")
    if "subsample_fps" in scalars:
        try:
            fps = float(scalars["subsample_fps"])
        except ValueError:
            raise ManifestError(
                f"{path}: subsample_fps must be a number, got "
                f"{scalars['subsample_fps']!r}") from None
        scalars["subsample_fps"] = fps
    scalars["output"] = Path(scalars["output"])
    return ExtractionManifest(videos=tuple(videos), **scalars)
