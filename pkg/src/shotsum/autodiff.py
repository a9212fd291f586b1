"""Minimal reverse-mode autodiff over numpy arrays.

Every operation builds a tape node holding its parents and a backward
closure; ``Tensor.backward()`` walks the tape in reverse topological
order and accumulates gradients into ``.grad``. Double precision is the
default; float32 inputs are kept as-is for release-mode runs.

Only the operations the summarizer needs exist here: affine building
blocks (matmul, broadcast add), row gather/scatter, segment means,
rowwise strided/dilated 1-D convolution, softmax, sigmoid, relu. No
general graph features (no higher-order grads, no in-place views).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

_FLOAT_DTYPES = (np.float32, np.float64)


class Tensor:
    """A numpy array plus a gradient slot and a tape entry."""

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        arr = np.asarray(data)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Seed this node with ones and backpropagate through the tape."""
        self.grad = np.ones_like(self.data)
        for node in reversed(_toposort(self)):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Operator sugar for the handful of ops used pervasively.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other), -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={'set' if self.grad is not None else 'none'})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def accumulate_grad(t: Tensor, g: np.ndarray) -> None:
    """Add ``g`` into ``t.grad``, reducing over broadcast axes first."""
    g = _unbroadcast(g, t.data.shape)
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    # Sum out prepended axes, then axes broadcast from size 1.
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise / linear algebra


def add(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data, (a, b))

    def backward(g):
        accumulate_grad(a, g)
        accumulate_grad(b, g)

    out._backward = backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data, (a, b))

    def backward(g):
        accumulate_grad(a, g * b.data)
        accumulate_grad(b, g * a.data)

    out._backward = backward
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c, (a,))

    def backward(g):
        accumulate_grad(a, g * c)

    out._backward = backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dims disagree: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, (a, b))

    def backward(g):
        accumulate_grad(a, g @ b.data.T)
        accumulate_grad(b, a.data.T @ g)

    out._backward = backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T, (a,))

    def backward(g):
        accumulate_grad(a, g.T)

    out._backward = backward
    return out


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.data.shape
    out = Tensor(a.data.reshape(shape), (a,))

    def backward(g):
        accumulate_grad(a, g.reshape(old))

    out._backward = backward
    return out


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(a.data.sum(), (a,))

    def backward(g):
        accumulate_grad(a, np.full_like(a.data, float(g)))

    out._backward = backward
    return out


def mean_all(a: Tensor) -> Tensor:
    return scale(sum_all(a), 1.0 / a.size)


# ---------------------------------------------------------------------------
# shape surgery


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = list(parts)
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis), tuple(parts))
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            accumulate_grad(p, g[tuple(idx)])

    out._backward = backward
    return out


def take_rows(a: Tensor, index: np.ndarray) -> Tensor:
    """Gather rows; repeated indices scatter-add in the backward pass."""
    index = np.asarray(index, dtype=np.intp)
    out = Tensor(a.data[index], (a,))

    def backward(g):
        da = np.zeros_like(a.data)
        np.add.at(da, index, g)
        accumulate_grad(a, da)

    out._backward = backward
    return out


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = Tensor(a.data[idx], (a,))

    def backward(g):
        da = np.zeros_like(a.data)
        da[idx] = g
        accumulate_grad(a, da)

    out._backward = backward
    return out


def segment_mean(a: Tensor, bounds: Iterable[tuple[int, int]]) -> Tensor:
    """Row means over [start, stop) segments; segments may overlap."""
    bounds = [(int(lo), int(hi)) for lo, hi in bounds]
    for lo, hi in bounds:
        if not 0 <= lo < hi <= a.shape[0]:
            raise ValueError(f"segment ({lo}, {hi}) out of range for {a.shape[0]} rows")
    out_data = np.stack([a.data[lo:hi].mean(axis=0) for lo, hi in bounds])
    out = Tensor(out_data, (a,))

    def backward(g):
        da = np.zeros_like(a.data)
        for s, (lo, hi) in enumerate(bounds):
            da[lo:hi] += g[s] / (hi - lo)
        accumulate_grad(a, da)

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# nonlinearities


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    # maximum, not where: NaN inputs must stay NaN for loss diagnostics
    out = Tensor(np.maximum(a.data, 0.0), (a,))

    def backward(g):
        accumulate_grad(a, g * mask)

    out._backward = backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(y, (a,))

    def backward(g):
        accumulate_grad(a, g * y * (1.0 - y))

    out._backward = backward
    return out


def softmax_rows(a: Tensor) -> Tensor:
    """Row softmax with max subtraction for stability."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    out = Tensor(y, (a,))

    def backward(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        accumulate_grad(a, y * (g - dot))

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# rowwise 1-D convolution


def conv1d_rows(x: Tensor, kernel: Tensor, bias: Tensor, stride: int, dilation: int = 1) -> Tensor:
    """Strided, dilated 1-D convolution applied to every row of ``x``.

    Each row is a 1-D signal of length C, zero-padded by
    ((k-1)*dilation)//2 per side so the output length is exactly
    ceil(C / stride). ``kernel`` has shape (k,), ``bias`` is a scalar
    tensor broadcast over every output position.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if dilation < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")
    if x.data.ndim != 2:
        raise ValueError(f"conv1d_rows expects a 2-D input, got shape {x.shape}")
    rows, width = x.data.shape
    k = kernel.data.shape[0]
    span = (k - 1) * dilation
    pad_left = span // 2
    pad_right = span - pad_left
    out_len = -(-width // stride)

    padded = np.pad(x.data, ((0, 0), (pad_left, pad_right)))
    taps = np.arange(out_len)[:, None] * stride + np.arange(k)[None, :] * dilation
    windows = padded[:, taps]  # (rows, out_len, k)
    out = Tensor(windows @ kernel.data + bias.data.reshape(()), (x, kernel, bias))

    def backward(g):
        accumulate_grad(kernel, np.tensordot(g, windows, axes=([0, 1], [0, 1])))
        accumulate_grad(bias, np.array(g.sum()).reshape(bias.data.shape))
        dpad = np.zeros_like(padded)
        np.add.at(dpad, (np.arange(rows)[:, None, None], taps[None, :, :]),
                  g[:, :, None] * kernel.data[None, None, :])
        accumulate_grad(x, dpad[:, pad_left:pad_left + width])

    out._backward = backward
    return out
