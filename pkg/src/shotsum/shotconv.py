"""Hierarchical shot convolution network.

Each layer runs three shot scales over the frame sequence: pad every
shot with copies of the previous shot's tail frames (circular for the
first shot), lift channels N -> multiplier*N, split into overlapping
shot blocks, average-pool each block to one vector, run four strided
1-D convolution branches along the channel axis of each shot vector,
reduce back to N channels, broadcast shot vectors to their frames, and
sum the three scale outputs with the residual input.

Per-shot locality is the load-bearing property: the convolution
branches never mix shots, so the only inter-shot channel is the padding
copy. One layer therefore extends a frame's influence by exactly one
shot, which `trace_propagation` measures empirically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import Tensor, add, concat, conv1d_rows, segment_mean, take_rows
from .nn import ParamSet, affine

# (kernel size, dilation) per branch; stride is shared.
BRANCH_SPECS: tuple[tuple[int, int], ...] = ((1, 1), (3, 1), (5, 2), (7, 2))
BRANCH_STRIDE = 4


class ShortVideoError(ValueError):
    """Sequence too short for the requested shot count."""


@dataclass(frozen=True)
class ScaleConfig:
    shot_count: int
    pad_ratio: float = 0.05
    channel_multiplier: int = 8
    filters_per_branch: int = 1

    def validate(self, n: int) -> None:
        if self.shot_count < 1:
            raise ValueError(f"shot_count must be >= 1, got {self.shot_count}")
        if not 0.0 <= self.pad_ratio < 1.0:
            raise ValueError(f"pad_ratio must be in [0, 1), got {self.pad_ratio}")
        lifted = self.channel_multiplier * n
        if lifted % BRANCH_STRIDE != 0:
            raise ValueError(
                f"lifted width {lifted} not divisible by stride {BRANCH_STRIDE}")


@dataclass(frozen=True)
class PadPlan:
    """Where every padded row comes from in the original timeline."""

    prefix_len: int
    source_index: np.ndarray  # (T + S*P,) original frame per padded row
    shot_bounds: tuple[tuple[int, int], ...]  # original-timeline [lo, hi) blocks

    @property
    def padded_len(self) -> int:
        return int(self.source_index.shape[0])


def pad_prefix_len(t: int, shot_count: int, pad_ratio: float) -> int:
    """Frames copied ahead of each shot: round(ratio * floor(T/S)), min 1."""
    if pad_ratio == 0.0:
        return 0
    return max(1, int(pad_ratio * (t // shot_count) + 0.5))


def original_shot_bounds(t: int, shot_count: int) -> tuple[tuple[int, int], ...]:
    """Equal blocks of floor(T/S); the last shot absorbs the remainder."""
    d = t // shot_count
    bounds = [(s * d, (s + 1) * d) for s in range(shot_count - 1)]
    bounds.append(((shot_count - 1) * d, t))
    return tuple(bounds)


def build_pad_plan(t: int, shot_count: int, pad_ratio: float) -> PadPlan:
    if t < shot_count:
        raise ShortVideoError(f"{t} frames cannot form {shot_count} shots")
    p = pad_prefix_len(t, shot_count, pad_ratio)
    bounds = original_shot_bounds(t, shot_count)
    index: list[int] = []
    for s, (lo, hi) in enumerate(bounds):
        prev_lo, prev_hi = bounds[s - 1]  # s=0 wraps to the last shot
        index.extend(range(prev_hi - p, prev_hi))
        index.extend(range(lo, hi))
    return PadPlan(prefix_len=p, source_index=np.asarray(index, dtype=np.intp),
                   shot_bounds=bounds)


def cross_shot_pad(x: Tensor, shot_count: int, pad_ratio: float) -> tuple[Tensor, PadPlan]:
    """Prefix every shot with copies of the previous shot's last P frames."""
    plan = build_pad_plan(x.shape[0], shot_count, pad_ratio)
    if plan.prefix_len == 0:
        return x, plan
    return take_rows(x, plan.source_index), plan


def lift_channels(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return affine(x, weight, bias)


def split_bounds(rows: int, shot_count: int) -> tuple[tuple[int, int], ...]:
    """Overlapping split blocks: each shot keeps the next shot's first frame.

    Block s covers [s*D, (s+1)*D + 1) with D = floor(rows/S); the last
    block is clamped to the sequence end and absorbs remainder frames.
    """
    if rows < shot_count:
        raise ShortVideoError(f"{rows} rows cannot split into {shot_count} blocks")
    d = rows // shot_count
    bounds = [(s * d, min((s + 1) * d + 1, rows)) for s in range(shot_count - 1)]
    bounds.append(((shot_count - 1) * d, rows))
    return tuple(bounds)


def pool_shots(x: Tensor, bounds: Sequence[tuple[int, int]]) -> Tensor:
    return segment_mean(x, bounds)


def inner_shotconv(shot_means: Tensor, params: ParamSet, prefix: str,
                   cfg: ScaleConfig, reduce_w: Tensor, reduce_b: Tensor) -> Tensor:
    """Four conv branches along each shot vector's channels, then reduce.

    Every shot row is convolved independently, so this op cannot move
    information between shots.
    """
    outs = []
    for k, dilation in BRANCH_SPECS:
        for f in range(cfg.filters_per_branch):
            kern = params[f"{prefix}branch_k{k}_f{f}.kernel"]
            bias = params[f"{prefix}branch_k{k}_f{f}.bias"]
            outs.append(conv1d_rows(shot_means, kern, bias,
                                    stride=BRANCH_STRIDE, dilation=dilation))
    return affine(concat(outs, axis=1), reduce_w, reduce_b)


def expand_to_frames(shot_reps: Tensor, t: int, shot_count: int) -> Tensor:
    """Give every frame its original-timeline shot's representation."""
    d = t // shot_count
    index = np.minimum(np.arange(t) // d, shot_count - 1)
    return take_rows(shot_reps, index)


@dataclass
class ScaleActivations:
    padded_lifted: Tensor
    shot_means: Tensor
    shot_out: Tensor
    frame_expanded: Tensor


@dataclass
class LayerActivations:
    scales: list[ScaleActivations] = field(default_factory=list)
    layer_out: Tensor | None = None


def layer_param_shapes(n: int, scales: Sequence[ScaleConfig]) -> list[tuple[str, tuple[int, ...]]]:
    """Name -> shape table for one layer; lifts and branches are per
    scale, the reduce map is shared across scales (they must agree on
    multiplier and filter count for the shared reduce to type-check)."""
    mults = {c.channel_multiplier for c in scales}
    filts = {c.filters_per_branch for c in scales}
    if len(mults) != 1 or len(filts) != 1:
        raise ValueError("scales must share channel_multiplier and filters_per_branch")
    lifted = scales[0].channel_multiplier * n
    if lifted % BRANCH_STRIDE != 0:
        raise ValueError(f"lifted width {lifted} not divisible by stride {BRANCH_STRIDE}")
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for i, cfg in enumerate(scales):
        shapes.append((f"scale{i}.lift_w", (n, lifted)))
        shapes.append((f"scale{i}.lift_b", (lifted,)))
        for k, _ in BRANCH_SPECS:
            for f in range(cfg.filters_per_branch):
                shapes.append((f"scale{i}.branch_k{k}_f{f}.kernel", (k,)))
                shapes.append((f"scale{i}.branch_k{k}_f{f}.bias", ()))
    reduced_in = scales[0].filters_per_branch * lifted
    shapes.append(("reduce_w", (reduced_in, n)))
    shapes.append(("reduce_b", (n,)))
    return shapes


def hierarchical_layer(x: Tensor, scales: Sequence[ScaleConfig], params: ParamSet,
                       prefix: str) -> tuple[Tensor, LayerActivations]:
    """One layer: per-scale pad/lift/split/pool/conv/expand, summed with
    the residual input."""
    t = x.shape[0]
    largest = max(c.shot_count for c in scales)
    if t < largest:
        raise ShortVideoError(f"{t} frames < largest shot count {largest}")
    acts = LayerActivations()
    out = x
    reduce_w = params[f"{prefix}reduce_w"]
    reduce_b = params[f"{prefix}reduce_b"]
    for i, cfg in enumerate(scales):
        padded, _ = cross_shot_pad(x, cfg.shot_count, cfg.pad_ratio)
        lifted = lift_channels(padded, params[f"{prefix}scale{i}.lift_w"],
                               params[f"{prefix}scale{i}.lift_b"])
        means = pool_shots(lifted, split_bounds(lifted.shape[0], cfg.shot_count))
        shot_out = inner_shotconv(means, params, f"{prefix}scale{i}.", cfg,
                                  reduce_w, reduce_b)
        expanded = expand_to_frames(shot_out, t, cfg.shot_count)
        acts.scales.append(ScaleActivations(padded_lifted=lifted, shot_means=means,
                                            shot_out=shot_out, frame_expanded=expanded))
        out = add(out, expanded)
    acts.layer_out = out
    return out, acts


def forward_network(x: Tensor, layers: int, scales: Sequence[ScaleConfig],
                    params: ParamSet, prefix: str = "") -> tuple[Tensor, list[LayerActivations]]:
    """Stack ``layers`` hierarchical layers; each consumes the previous output."""
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    all_acts: list[LayerActivations] = []
    out = x
    for layer in range(layers):
        out, acts = hierarchical_layer(out, scales, params, f"{prefix}layer{layer}.")
        all_acts.append(acts)
    return out, all_acts


def build_network_params(n: int, scales: Sequence[ScaleConfig], layers: int,
                         rng: np.random.Generator, weight_scale: float = 0.4) -> ParamSet:
    """Random nonzero parameters for a bare shot network (tracing, tests)."""
    ps = ParamSet()
    for layer in range(layers):
        for name, shape in layer_param_shapes(n, scales):
            data = np.asarray(rng.standard_normal(shape) * weight_scale)
            data[np.abs(data) < 1e-3] = 1e-3  # nonzero so no path is silently dead
            ps.add(f"layer{layer}.{name}", Tensor(data))
    return ps


def trace_propagation(t: int, source_frame: int, scales: Sequence[ScaleConfig],
                      layers: int, n: int = 6, seed: int = 0,
                      threshold: float = 1e-9, delta: float = 1.0) -> np.ndarray:
    """Empirical influence mask: which output frames move when the
    source frame's input row is perturbed.

    Runs the bare shot network twice with identical fixed-seed weights
    and diffs the outputs; frame-to-frame flow in the full model happens
    only here, so the mask is the model's temporal receptive field.
    """
    if not 0 <= source_frame < t:
        raise ValueError(f"source frame {source_frame} out of range for {t} frames")
    rng = np.random.default_rng(seed)
    params = build_network_params(n, scales, layers, rng)
    base = rng.standard_normal((t, n))
    bumped = base.copy()
    bumped[source_frame] += delta
    out_base, _ = forward_network(Tensor(base), layers, scales, params)
    out_bump, _ = forward_network(Tensor(bumped), layers, scales, params)
    diff = np.abs(out_base.data - out_bump.data).max(axis=1)
    return diff > threshold


def format_propagation_report(masks: dict[int, np.ndarray], t: int) -> str:
    """Plain-text matrix: one row per source frame, X where influenced."""
    lines = ["source | " + "".join(str(i % 10) for i in range(t))]
    lines.append("-" * len(lines[0]))
    for src in sorted(masks):
        row = "".join("X" if m else "." for m in masks[src])
        lines.append(f"{src:6d} | {row}")
    return "\n".join(lines)


def propagation_pairs(masks: dict[int, np.ndarray]) -> list[tuple[int, list[int]]]:
    """Machine-readable (source, influenced frame list) pairs."""
    return [(src, np.flatnonzero(masks[src]).tolist()) for src in sorted(masks)]
