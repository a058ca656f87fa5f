"""Decoder-only model assembly: embeddings, block stack, final norm, head."""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .block import block_forward, init_block
from .config import ConfigError, ModelConfig
from .params import ParameterStore, const_init, normal_init
from .tensor import Tensor

INIT_STD = 0.02


def init_parameters(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> ParameterStore:
    """Build a fresh parameter store; the draw order is fixed, so a seed
    pins every weight regardless of dtype."""
    rng = np.random.default_rng(seed)
    store = ParameterStore()
    store.add("embed.weight", normal_init(rng, (cfg.vocab, cfg.d), INIT_STD, dtype))
    if not cfg.tie_embeddings:
        store.add("head.weight", normal_init(rng, (cfg.d, cfg.vocab), INIT_STD, dtype))
    for layer in range(cfg.L):
        init_block(store, layer, cfg, rng, dtype)
    store.add("final_norm.gain", const_init((cfg.d,), 1.0, dtype))
    return store


def _shuffle_perms(shuffle_seed: int, seq_ids: np.ndarray, layer: int, t: int) -> np.ndarray:
    """One permutation of token positions per sequence, pinned by
    (seed, sequence index, layer)."""
    perms = np.empty((seq_ids.size, t), dtype=np.int64)
    for row, sid in enumerate(seq_ids):
        rng = np.random.default_rng([shuffle_seed, int(sid), layer])
        perms[row] = rng.permutation(t)
    return perms


def model_forward(tokens: np.ndarray, store: ParameterStore, cfg: ModelConfig,
                  forced_k: int | None = None,
                  gate_override: tuple | None = None,
                  shuffle_seed: int | None = None,
                  gain_override: float | None = None,
                  seq_ids: np.ndarray | None = None,
                  collector=None) -> Tensor:
    """Logits [B, T, vocab] for a batch of token id rows."""
    tokens = np.asarray(tokens)
    if tokens.ndim == 1:
        tokens = tokens[None, :]
    if tokens.ndim != 2:
        raise ConfigError(f"tokens must be [B, T], got shape {tokens.shape}")
    b, t = tokens.shape
    if t > cfg.t_max:
        raise ConfigError(f"sequence length {t} exceeds t_max {cfg.t_max}")
    if tokens.min() < 0 or tokens.max() >= cfg.vocab:
        raise ConfigError(f"token id out of range [0, {cfg.vocab})")
    if seq_ids is None:
        seq_ids = np.arange(b)
    seq_ids = np.asarray(seq_ids)

    positions = np.arange(t)
    mask = T.causal_mask(t)
    x = T.embedding(store["embed.weight"], tokens)
    if collector is not None:
        collector.begin_batch(seq_ids=seq_ids, token_ids=tokens)
    for layer in range(cfg.L):
        perms = None
        if shuffle_seed is not None and cfg.variant == "dual":
            perms = _shuffle_perms(shuffle_seed, seq_ids, layer, t)
        x = block_forward(
            x, store, layer, cfg, mask, positions,
            forced_k=forced_k, gate_override=gate_override, perms=perms,
            gain_override=gain_override, collector=collector,
            token_ids=tokens, seq_ids=seq_ids,
        )
    x = T.rmsnorm(x, store["final_norm.gain"], cfg.eps)
    if cfg.tie_embeddings:
        return T.matmul(x, T.transpose(store["embed.weight"], (1, 0)))
    return T.matmul(x, store["head.weight"])


def sequence_loss(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean next-token cross-entropy in nats over every position."""
    b, t, v = logits.shape
    flat = T.reshape(logits, (b * t, v))
    return T.tmean(T.cross_entropy(flat, np.asarray(targets).reshape(-1)))


def greedy_decode(store: ParameterStore, cfg: ModelConfig, prompt: np.ndarray,
                  n_new: int) -> np.ndarray:
    """Extend a prompt by n_new argmax tokens (sanity output, not sampling)."""
    ids = list(np.asarray(prompt).reshape(-1))
    for _ in range(n_new):
        window = np.array(ids[-cfg.t_max:], dtype=np.int64)
        logits = model_forward(window[None, :], store, cfg)
        ids.append(int(np.argmax(logits.data[0, -1])))
    return np.array(ids, dtype=np.int64)
