"""Network building blocks on top of the autodiff tape.

Affine maps, multi-head cross attention, the focal frame loss, the Adam
update, and a finite-difference gradient checker used by both the test
suite and the ``gradcheck`` CLI command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .autodiff import (
    Tensor,
    accumulate_grad,
    add,
    concat,
    matmul,
    narrow,
    relu,
    scale,
    sigmoid,
    softmax_rows,
    sum_all,
    transpose,
)


class ParamSet:
    """Ordered name -> Tensor mapping for everything the optimizer touches."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.items())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def count(self) -> int:
        return sum(t.size for t in self._params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self._params.items()}

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray]) -> "ParamSet":
        ps = cls()
        for name, arr in arrays.items():
            ps.add(name, Tensor(np.asarray(arr)))
        return ps

    def load_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ValueError(f"parameter names disagree: missing={sorted(missing)} extra={sorted(extra)}")
        for name, t in self._params.items():
            arr = np.asarray(arrays[name], dtype=t.data.dtype)
            if arr.shape != t.data.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {t.data.shape}")
            t.data = arr


def affine(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def multihead_cross_attention(query: Tensor, keys: Tensor, w_q: Tensor, w_k: Tensor,
                              w_v: Tensor, w_o: Tensor, heads: int) -> Tensor:
    """Scaled dot-product cross attention over the key rows.

    ``query`` is (T, N) and attends over ``keys`` (K, N); all four
    projections are square (N, N) without biases. The N channels are
    split evenly across heads, each head runs its own
    softmax(QK^T/sqrt(d))V, and the concatenated heads pass through the
    output projection. No residual here; callers add one if they want it.
    """
    n = query.shape[1]
    if n % heads != 0:
        raise ValueError(f"feature dim {n} not divisible by {heads} heads")
    d = n // heads
    q = matmul(query, w_q)
    k = matmul(keys, w_k)
    v = matmul(keys, w_v)
    inv_sqrt_d = 1.0 / math.sqrt(d)
    head_outs = []
    for h in range(heads):
        qh = narrow(q, 1, h * d, d)
        kh = narrow(k, 1, h * d, d)
        vh = narrow(v, 1, h * d, d)
        logits = scale(matmul(qh, transpose(kh)), inv_sqrt_d)
        weights = softmax_rows(logits)
        head_outs.append(matmul(weights, vh))
    attended = concat(head_outs, axis=1) if heads > 1 else head_outs[0]
    return matmul(attended, w_o)


def focal_loss(scores: Tensor, labels: np.ndarray, alpha: float = 0.25,
               gamma: float = 2.0, eps: float = 1e-7) -> Tensor:
    """Mean focal loss over per-frame sigmoid scores against 0/1 labels.

    Scores are clamped to [eps, 1-eps] before the log. The backward pass
    uses the analytic d/dp, with the modulating term's derivative dropped
    when gamma == 0 so the expression never evaluates 0^(negative).
    """
    y = np.asarray(labels, dtype=scores.data.dtype).reshape(scores.data.shape)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("focal loss expects binary labels")
    p = np.clip(scores.data, eps, 1.0 - eps)
    pos = -alpha * np.power(1.0 - p, gamma) * np.log(p)
    neg = -(1.0 - alpha) * np.power(p, gamma) * np.log(1.0 - p)
    per_frame = np.where(y == 1, pos, neg)
    out = Tensor(per_frame.mean(), (scores,))

    def backward(g):
        if gamma == 0.0:
            dpos = -alpha / p
            dneg = (1.0 - alpha) / (1.0 - p)
        else:
            dpos = alpha * gamma * np.power(1.0 - p, gamma - 1.0) * np.log(p) \
                - alpha * np.power(1.0 - p, gamma) / p
            dneg = -(1.0 - alpha) * gamma * np.power(p, gamma - 1.0) * np.log(1.0 - p) \
                + (1.0 - alpha) * np.power(p, gamma) / (1.0 - p)
        dp = np.where(y == 1, dpos, dneg)
        inside = (scores.data > eps) & (scores.data < 1.0 - eps)
        accumulate_grad(scores, float(g) * dp * inside / scores.size)

    out._backward = backward
    return out


def bce_loss(scores: Tensor, labels: np.ndarray, eps: float = 1e-7) -> Tensor:
    """Plain binary cross entropy; equals focal_loss(gamma=0, alpha=0.5) * 2."""
    return scale(focal_loss(scores, labels, alpha=0.5, gamma=0.0, eps=eps), 2.0)


@dataclass
class AdamOptimizer:
    """Adam with bias correction; one slot pair per parameter tensor."""

    params: ParamSet
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    _m: dict[str, np.ndarray] = field(default_factory=dict)
    _v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        for name, p in self.params:
            g = p.grad
            if g is None:
                continue
            m = self._m.setdefault(name, np.zeros_like(p.data))
            v = self._v.setdefault(name, np.zeros_like(p.data))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class GradCheckReport:
    """Per-parameter worst relative error plus coverage flags."""

    max_rel_err: float
    per_param: dict[str, float]
    zero_grad_params: list[str]
    checked_coords: int

    @property
    def passed(self) -> bool:
        return self.max_rel_err < 1e-4 and not self.zero_grad_params


def grad_check(loss_fn: Callable[[], Tensor], params: ParamSet, eps: float = 1e-5,
               max_coords_per_param: int = 64, seed: int = 0) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` must rebuild the forward pass from the parameters' current
    ``.data`` on every call. Coordinates are subsampled per tensor with a
    seeded generator so the check stays fast on wide matrices. Relative
    error uses max(|analytic|, |numeric|, 1e-6) in the denominator.
    Parameters whose analytic gradient is identically zero are reported
    separately: a zero gradient on a live path means the check proved
    nothing for that tensor.
    """
    params.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for name, t in params}

    rng = np.random.default_rng(seed)
    per_param: dict[str, float] = {}
    zero_grad: list[str] = []
    checked = 0
    for name, t in params:
        a = analytic[name]
        if not np.any(a):
            zero_grad.append(name)
        flat = t.data.reshape(-1)
        n = flat.size
        coords = np.arange(n) if n <= max_coords_per_param else rng.choice(
            n, size=max_coords_per_param, replace=False)
        worst = 0.0
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            hi = float(loss_fn().data)
            flat[c] = orig - eps
            lo = float(loss_fn().data)
            flat[c] = orig
            numeric = (hi - lo) / (2.0 * eps)
            ana = float(a.reshape(-1)[c])
            rel = abs(ana - numeric) / max(abs(ana), abs(numeric), 1e-6)
            worst = max(worst, rel)
            checked += 1
        per_param[name] = worst
    max_rel = max(per_param.values()) if per_param else 0.0
    return GradCheckReport(max_rel_err=max_rel, per_param=per_param,
                           zero_grad_params=zero_grad, checked_coords=checked)


def score_head(frames: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Frame scores in (0, 1): hidden relu layer then a sigmoid unit."""
    hidden = relu(affine(frames, w1, b1))
    return sigmoid(affine(hidden, w2, b2))


def mean_frame_score(scores: Tensor) -> Tensor:
    return scale(sum_all(scores), 1.0 / scores.size)
