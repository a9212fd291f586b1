"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from shotsum.autodiff import Tensor


def numeric_grad(fn, arr: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Dense central-difference gradient of scalar fn(arr) w.r.t. arr.

    Written independently of shotsum.nn.grad_check so the two never share
    a bug: this one perturbs a plain array and calls a plain function.
    """
    g = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = float(fn(arr))
        flat[i] = orig - eps
        lo = float(fn(arr))
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return g


def max_rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def tensor_of(rng: np.random.Generator, *shape: int, scale: float = 1.0) -> Tensor:
    return Tensor(rng.standard_normal(shape) * scale)
