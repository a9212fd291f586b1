"""Shot-aware multimodal video summarization.

Frame, audio, and caption features are fused, passed through a stack of
hierarchical shot-convolution layers, and scored per frame; summaries
are assembled from segment scores under a length budget.
"""

from .autodiff import Tensor, accumulate_grad
from .config import ConfigError, ModelConfig, RunConfig, TrainConfig
from .data_io import (
    ContainerFormatError,
    VideoNotFoundError,
    VideoRecord,
    load_container,
    load_video_record,
    make_synthetic_container,
    make_synthetic_record,
    write_container,
)
from .evaluation import EvalReport, fscore, run_cv
from .model import build_params, count_params, forward_model
from .nn import AdamOptimizer, ParamSet, focal_loss, grad_check
from .shotconv import ScaleConfig, ShortVideoError, trace_propagation
from .summarize import Summary, kts_segment, knapsack_select, summarize_scores
from .train import TrainHistory, train_model

__version__ = "0.1.0"

__all__ = [
    "AdamOptimizer",
    "ConfigError",
    "ContainerFormatError",
    "EvalReport",
    "ModelConfig",
    "ParamSet",
    "RunConfig",
    "ScaleConfig",
    "ShortVideoError",
    "Summary",
    "Tensor",
    "TrainConfig",
    "TrainHistory",
    "VideoNotFoundError",
    "VideoRecord",
    "accumulate_grad",
    "build_params",
    "count_params",
    "focal_loss",
    "forward_model",
    "fscore",
    "grad_check",
    "knapsack_select",
    "kts_segment",
    "load_container",
    "load_video_record",
    "make_synthetic_container",
    "make_synthetic_record",
    "run_cv",
    "summarize_scores",
    "trace_propagation",
    "train_model",
    "write_container",
]
