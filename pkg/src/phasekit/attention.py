"""Minimal scaled-dot-product and multi-head attention kernels.

Scores are QK^T / sqrt(d) with d the shared query/key width; no output
projection, residuals, or layer norm. The kernel exists for numeric
verification and to drive the simulator's smoothing mode, not for training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logits import softmax


@dataclass(frozen=True)
class HeadConfig:
    """Shape contract for a multi-head stack: H heads mapping d_in -> d_h each."""

    num_heads: int
    d_in: int
    d_h: int

    def __post_init__(self):
        for name in ("num_heads", "d_in", "d_h"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def output_width(self) -> int:
        return self.num_heads * self.d_h


@dataclass(frozen=True)
class AttentionWeights:
    """Projection matrices for one head; each maps d_in to the head width."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    def __post_init__(self):
        for name in ("w_q", "w_k", "w_v"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be a 2-D matrix")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.w_q.shape != self.w_k.shape:
            raise ValueError("w_q and w_k must share a shape")
        if self.w_v.shape[0] != self.w_q.shape[0]:
            raise ValueError("w_v input width must match w_q/w_k")


def _check_matrix(name: str, arr) -> np.ndarray:
    m = np.asarray(arr, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def scaled_dot_attention(queries, keys, values, return_weights: bool = False):
    """softmax(Q K^T / sqrt(d)) V for Q (n, d), K (m, d), V (m, d_v).

    Each softmax row is a probability vector, so every output row is a convex
    combination of V's rows. Set ``return_weights`` to also get the (n, m)
    attention matrix.
    """
    q = _check_matrix("queries", queries)
    k = _check_matrix("keys", keys)
    v = _check_matrix("values", values)
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"query width {q.shape[1]} does not match key width {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"key count {k.shape[0]} does not match value count {v.shape[0]}")
    scores = q @ k.T / math.sqrt(q.shape[1])
    weights = softmax(scores)
    out = weights @ v
    if return_weights:
        return out, weights
    return out


def multi_head_attention(x, heads, cfg: HeadConfig) -> np.ndarray:
    """Project x through each head, attend, and concatenate head outputs.

    x is (n, d_in); the result is (n, num_heads * d_h). With one head this is
    exactly scaled_dot_attention on the projected inputs.
    """
    xm = _check_matrix("x", x)
    heads = list(heads)
    if len(heads) != cfg.num_heads:
        raise ValueError(f"expected {cfg.num_heads} heads, got {len(heads)}")
    if xm.shape[1] != cfg.d_in:
        raise ValueError(f"x width {xm.shape[1]} does not match d_in={cfg.d_in}")
    outputs = []
    for i, head in enumerate(heads):
        if head.w_q.shape != (cfg.d_in, cfg.d_h) or head.w_v.shape != (cfg.d_in, cfg.d_h):
            raise ValueError(f"head {i} weights do not map d_in={cfg.d_in} to d_h={cfg.d_h}")
        outputs.append(scaled_dot_attention(xm @ head.w_q, xm @ head.w_k, xm @ head.w_v))
    return np.concatenate(outputs, axis=1)
