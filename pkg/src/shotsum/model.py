"""Full model assembly: fusion -> shot network -> scoring head.

One shape table drives parameter construction, checkpoint layout, and
parameter counting, so the three can never drift apart. Counting is
pure shape arithmetic; it never allocates, which keeps the default
configuration (hundreds of millions of entries) instant to count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .config import ModelConfig
from .fusion import FusionActivations, fuse_modalities
from .nn import ParamSet, score_head
from .shotconv import LayerActivations, forward_network, layer_param_shapes


def param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    n, m, n_c = cfg.frame_dim, cfg.audio_dim, cfg.caption_dim
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("fusion.w_audio", (m, n)),
        ("fusion.b_audio", (n,)),
        ("fusion.w_cap", (n_c, n)),
        ("fusion.w_q", (n, n)),
        ("fusion.w_k", (n, n)),
        ("fusion.w_v", (n, n)),
        ("fusion.w_o", (n, n)),
    ]
    scales = cfg.scales()
    for layer in range(cfg.layers):
        shapes.extend((f"layer{layer}.{name}", shape)
                      for name, shape in layer_param_shapes(n, scales))
    shapes.extend([
        ("head.w1", (n, cfg.head_hidden)),
        ("head.b1", (cfg.head_hidden,)),
        ("head.w2", (cfg.head_hidden, 1)),
        ("head.b2", (1,)),
    ])
    return shapes


def count_params(cfg: ModelConfig) -> tuple[int, dict[str, int]]:
    """Total parameter count and a per-group breakdown, by shape arithmetic."""
    breakdown: dict[str, int] = {}
    for name, shape in param_shapes(cfg):
        group = name.split(".", 1)[0]
        size = 1
        for dim in shape:
            size *= dim
        breakdown[group] = breakdown.get(group, 0) + size
    return sum(breakdown.values()), breakdown


def build_params(cfg: ModelConfig, rng: np.random.Generator,
                 dtype=np.float64) -> ParamSet:
    """Initialize parameters: matrices scaled by 1/sqrt(fan_in), conv
    kernels at modest scale, biases zero."""
    ps = ParamSet()
    for name, shape in param_shapes(cfg):
        if name.endswith(("b_audio", ".lift_b", "reduce_b", ".bias", "b1", "b2")):
            data = np.zeros(shape)
        elif len(shape) == 2:
            data = rng.standard_normal(shape) / np.sqrt(shape[0])
        else:
            data = rng.standard_normal(shape) * 0.3
        ps.add(name, Tensor(np.asarray(data, dtype=dtype)))
    return ps


@dataclass
class ModelActivations:
    fusion: FusionActivations
    layers: list[LayerActivations]
    shot_out: Tensor    # T x N after the stacked layers
    scores: Tensor      # T x 1 in (0, 1)

    def summary_rows(self) -> list[tuple[str, tuple[int, ...], float, float, float]]:
        """(name, shape, min, max, finite fraction) per activation, for
        diagnostic dumps when a loss goes non-finite."""
        rows = []

        def describe(name: str, t: Tensor):
            data = t.data
            finite_mask = np.isfinite(data)
            finite = float(finite_mask.mean()) if data.size else 1.0
            if finite_mask.any():
                lo = float(np.min(data[finite_mask]))
                hi = float(np.max(data[finite_mask]))
            else:
                lo = hi = float("nan")
            rows.append((name, t.shape, lo, hi, finite))

        describe("audio_fused", self.fusion.audio_fused)
        describe("caption_keys", self.fusion.caption_keys)
        describe("multimodal", self.fusion.multimodal)
        for i, layer in enumerate(self.layers):
            for j, sc in enumerate(layer.scales):
                describe(f"layer{i}.scale{j}.shot_means", sc.shot_means)
                describe(f"layer{i}.scale{j}.frame_expanded", sc.frame_expanded)
            describe(f"layer{i}.out", layer.layer_out)
        describe("scores", self.scores)
        return rows


def forward_model(frames: np.ndarray, audio: np.ndarray, captions: np.ndarray,
                  params: ParamSet, cfg: ModelConfig) -> ModelActivations:
    """Score every frame of one video; inputs are plain arrays."""
    fusion = fuse_modalities(
        Tensor(frames), Tensor(audio), Tensor(captions),
        params["fusion.w_audio"], params["fusion.b_audio"], params["fusion.w_cap"],
        params["fusion.w_q"], params["fusion.w_k"], params["fusion.w_v"],
        params["fusion.w_o"], heads=cfg.heads, caption_mode=cfg.caption_mode)
    shot_out, layer_acts = forward_network(fusion.multimodal, cfg.layers,
                                           cfg.scales(), params)
    scores = score_head(shot_out, params["head.w1"], params["head.b1"],
                        params["head.w2"], params["head.b2"])
    return ModelActivations(fusion=fusion, layers=layer_acts,
                            shot_out=shot_out, scores=scores)
