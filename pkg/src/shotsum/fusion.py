"""Multimodal frame representation: frame + audio + caption.

Audio is projected into the frame feature space and added rowwise;
caption sentence embeddings are projected and either mean-pooled to one
key (default) or kept as separate tokens; the caption then conditions
every frame through multi-head cross attention with a residual.
"""

from __future__ import annotations

from dataclasses import dataclass

from .autodiff import Tensor, add, matmul, segment_mean
from .nn import affine, multihead_cross_attention

CAPTION_MODES = ("mean", "tokens")


@dataclass
class FusionActivations:
    audio_fused: Tensor      # frame features with audio projected in, T x N
    caption_keys: Tensor     # projected caption rows used as attention keys
    multimodal: Tensor       # attention-enhanced frames, T x N


def project_audio(frames: Tensor, audio: Tensor, w_audio: Tensor, b_audio: Tensor) -> Tensor:
    """Rowwise frames + audio @ W + b; shapes (T,N), (T,M), (M,N), (N)."""
    if frames.shape[0] != audio.shape[0]:
        raise ValueError(f"frame/audio row counts disagree: {frames.shape} vs {audio.shape}")
    return add(frames, affine(audio, w_audio, b_audio))


def pool_captions(caption_embeds: Tensor, w_cap: Tensor, mode: str = "mean") -> Tensor:
    """Project K sentence embeddings to N dims; pool to one row or keep all.

    ``mean`` averages the projected rows into a single attention key
    (balances multiple sentences); ``tokens`` keeps K separate keys.
    """
    if mode not in CAPTION_MODES:
        raise ValueError(f"caption mode must be one of {CAPTION_MODES}, got {mode!r}")
    k = caption_embeds.shape[0]
    if k < 1:
        raise ValueError("caption embedding matrix has no rows")
    projected = matmul(caption_embeds, w_cap)
    if mode == "tokens":
        return projected
    return segment_mean(projected, [(0, k)])


def fuse_caption(audio_fused: Tensor, caption_keys: Tensor, w_q: Tensor, w_k: Tensor,
                 w_v: Tensor, w_o: Tensor, heads: int) -> Tensor:
    """Frames attend over caption keys; residual keeps frame identity.

    With a single pooled key the attention output is one shared vector,
    so without the residual every frame would collapse to it.
    """
    attended = multihead_cross_attention(audio_fused, caption_keys,
                                         w_q, w_k, w_v, w_o, heads)
    return add(audio_fused, attended)


def fuse_modalities(frames: Tensor, audio: Tensor, caption_embeds: Tensor,
                    w_audio: Tensor, b_audio: Tensor, w_cap: Tensor,
                    w_q: Tensor, w_k: Tensor, w_v: Tensor, w_o: Tensor,
                    heads: int, caption_mode: str = "mean") -> FusionActivations:
    audio_fused = project_audio(frames, audio, w_audio, b_audio)
    caption_keys = pool_captions(caption_embeds, w_cap, caption_mode)
    multimodal = fuse_caption(audio_fused, caption_keys, w_q, w_k, w_v, w_o, heads)
    return FusionActivations(audio_fused=audio_fused, caption_keys=caption_keys,
                             multimodal=multimodal)
