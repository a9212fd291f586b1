"""Offline extraction of frame, audio, and caption features from raw
videos into the HDF5 dataset container layout used for summarization."""

from .annotations import AnnotationError, frame_targets, load_annotations, sidecar_path
from .backbones import (
    AudioStatEmbedder,
    BackboneError,
    CaptionGenerator,
    FrameStatEmbedder,
    SentenceEncoder,
    get_backbone,
)
from .extract import ExtractionReport, extract, extract_video
from .manifest import ExtractionManifest, ManifestError, parse_manifest
from .videoio import DecodedVideo, VideoReadError, decode_video, scene_change_points

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "AudioStatEmbedder",
    "BackboneError",
    "CaptionGenerator",
    "DecodedVideo",
    "ExtractionManifest",
    "ExtractionReport",
    "FrameStatEmbedder",
    "ManifestError",
    "SentenceEncoder",
    "VideoReadError",
    "decode_video",
    "extract",
    "extract_video",
    "frame_targets",
    "get_backbone",
    "load_annotations",
    "parse_manifest",
    "scene_change_points",
    "sidecar_path",
]
