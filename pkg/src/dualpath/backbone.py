"""Attention and feed-forward primitives shared by every block variant.

Attention is causal multi-head with grouped key/value heads: queries and
keys are RMS-normalized per head dimension (one learned gain per side,
shared across heads) after projection, then rotated by RoPE, then scored
at 1/sqrt(d_head). The FFN is a gated SwiGLU.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .config import ModelConfig
from .params import ParameterStore, const_init, normal_init
from .tensor import Tensor

INIT_STD = 0.02


@dataclass
class AttentionParams:
    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    q_gain: Tensor
    k_gain: Tensor

    @classmethod
    def init(cls, store: ParameterStore, prefix: str, cfg: ModelConfig,
             rng: np.random.Generator, dtype) -> None:
        d, d_head = cfg.d, cfg.d_head
        d_kv = cfg.h_kv * d_head
        store.add(f"{prefix}.w_q", normal_init(rng, (d, d), INIT_STD, dtype))
        store.add(f"{prefix}.w_k", normal_init(rng, (d, d_kv), INIT_STD, dtype))
        store.add(f"{prefix}.w_v", normal_init(rng, (d, d_kv), INIT_STD, dtype))
        store.add(f"{prefix}.w_o", normal_init(rng, (d, d), INIT_STD, dtype))
        store.add(f"{prefix}.q_gain", const_init((d_head,), 1.0, dtype))
        store.add(f"{prefix}.k_gain", const_init((d_head,), 1.0, dtype))

    @classmethod
    def from_store(cls, store: ParameterStore, prefix: str) -> "AttentionParams":
        return cls(*(store[f"{prefix}.{n}"] for n in
                     ("w_q", "w_k", "w_v", "w_o", "q_gain", "k_gain")))


@dataclass
class SwigluParams:
    w_gate: Tensor
    w_up: Tensor
    w_down: Tensor

    @classmethod
    def init(cls, store: ParameterStore, prefix: str, d: int, hidden: int,
             rng: np.random.Generator, dtype) -> None:
        store.add(f"{prefix}.w_gate", normal_init(rng, (d, hidden), INIT_STD, dtype))
        store.add(f"{prefix}.w_up", normal_init(rng, (d, hidden), INIT_STD, dtype))
        store.add(f"{prefix}.w_down", normal_init(rng, (hidden, d), INIT_STD, dtype))

    @classmethod
    def from_store(cls, store: ParameterStore, prefix: str) -> "SwigluParams":
        return cls(*(store[f"{prefix}.{n}"] for n in ("w_gate", "w_up", "w_down")))


def attention(x: Tensor, p: AttentionParams, cfg: ModelConfig,
              mask: np.ndarray, positions: np.ndarray) -> Tensor:
    """Causal attention over x of shape [B, T, d]."""
    b, t, d = x.shape
    h_q, h_kv, dh = cfg.h_q, cfg.h_kv, cfg.d_head
    q = T.reshape(T.matmul(x, p.w_q), (b, t, h_q, dh))
    k = T.reshape(T.matmul(x, p.w_k), (b, t, h_kv, dh))
    v = T.reshape(T.matmul(x, p.w_v), (b, t, h_kv, dh))
    q = T.rmsnorm(q, p.q_gain, cfg.eps)
    k = T.rmsnorm(k, p.k_gain, cfg.eps)
    q = T.rope(q, positions, cfg.rope_base)
    k = T.rope(k, positions, cfg.rope_base)
    q = T.transpose(q, (0, 2, 1, 3))  # [B, h_q, T, dh]
    k = T.transpose(k, (0, 2, 1, 3))
    v = T.transpose(v, (0, 2, 1, 3))
    if cfg.n_rep > 1:
        k = T.repeat_heads(k, cfg.n_rep)
        v = T.repeat_heads(v, cfg.n_rep)
    q = T.reshape(q, (b * h_q, t, dh))
    k = T.reshape(k, (b * h_q, t, dh))
    v = T.reshape(v, (b * h_q, t, dh))
    scores = T.scale(T.matmul(q, T.transpose(k, (0, 2, 1))), 1.0 / math.sqrt(dh))
    probs = T.masked_softmax(scores, mask)
    ctx = T.matmul(probs, v)  # [B*h_q, T, dh]
    ctx = T.transpose(T.reshape(ctx, (b, h_q, t, dh)), (0, 2, 1, 3))
    return T.matmul(T.reshape(ctx, (b, t, d)), p.w_o)


def swiglu(x: Tensor, p: SwigluParams) -> Tensor:
    """W_down applied to SiLU(x W_gate) * (x W_up)."""
    return T.matmul(T.mul(T.silu(T.matmul(x, p.w_gate)), T.matmul(x, p.w_up)), p.w_down)
