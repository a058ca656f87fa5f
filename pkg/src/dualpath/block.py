"""Dual-path layer: a weight-shared looped sublayer and a single-pass wide
sublayer, mixed per token by two sigmoid gates.

The looped (deep) path applies its sublayer K times with one learned gain
per iteration and folds the intermediate states together with a per-token
halting router: after step k < K the router emits q_k, the probability of
stopping at state h^(k); survivors continue. The mixture

    h_deep = sum_k prod_{j<k}(1 - q_j) * q_k * h^(k) + prod_j(1 - q_j) * h^(K)

is evaluated as a back-to-front lerp chain, which is algebraically the
same thing and returns the input bit-exactly when every state equals the
input. The wide path is one sublayer pass at full width. Single-path
variants skip the gates entirely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .backbone import AttentionParams, SwigluParams, attention, swiglu
from .config import ModelConfig
from .params import ParameterStore, const_init
from .tensor import Tensor

GAIN_LOGIT_INIT = -7.0
ROUTER_BIAS_INIT = -2.0


@dataclass
class SublayerParams:
    """One pre-norm attention + FFN unit (the repeated or wide cell)."""

    norm_attn: Tensor
    attn: AttentionParams
    norm_ffn: Tensor
    ffn: SwigluParams

    @classmethod
    def init(cls, store: ParameterStore, prefix: str, cfg: ModelConfig,
             hidden: int, rng: np.random.Generator, dtype) -> None:
        store.add(f"{prefix}.norm_attn.gain", const_init((cfg.d,), 1.0, dtype))
        AttentionParams.init(store, f"{prefix}.attn", cfg, rng, dtype)
        store.add(f"{prefix}.norm_ffn.gain", const_init((cfg.d,), 1.0, dtype))
        SwigluParams.init(store, f"{prefix}.ffn", cfg.d, hidden, rng, dtype)

    @classmethod
    def from_store(cls, store: ParameterStore, prefix: str) -> "SublayerParams":
        return cls(
            norm_attn=store[f"{prefix}.norm_attn.gain"],
            attn=AttentionParams.from_store(store, f"{prefix}.attn"),
            norm_ffn=store[f"{prefix}.norm_ffn.gain"],
            ffn=SwigluParams.from_store(store, f"{prefix}.ffn"),
        )


def sublayer(x: Tensor, sp: SublayerParams, s: Tensor, cfg: ModelConfig,
             mask: np.ndarray, positions: np.ndarray) -> Tensor:
    """u = x + s*Attn(norm(x)); out = u + s*FFN(norm(u))."""
    u = T.add(x, T.mul(attention(T.rmsnorm(x, sp.norm_attn, cfg.eps), sp.attn, cfg, mask, positions), s))
    return T.add(u, T.mul(swiglu(T.rmsnorm(u, sp.norm_ffn, cfg.eps), sp.ffn), s))


def loop_mix_weights(q: np.ndarray) -> np.ndarray:
    """Explicit mixture weights for stop probabilities q[0..K-2].

    Returns K weights: survival-weighted stops for states 1..K-1 and the
    leftover mass on the final state. They sum to 1 by construction.
    """
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0) or np.any(q > 1):
        raise ValueError("stop probabilities must lie in [0, 1]")
    k = q.size + 1
    weights = np.empty(k, dtype=np.float64)
    survive = 1.0
    for i in range(k - 1):
        weights[i] = survive * q[i]
        survive *= 1.0 - q[i]
    weights[k - 1] = survive
    return weights


def _router_prob(h: Tensor, step: int, k_norm: int, weight: Tensor, bias: Tensor) -> Tensor:
    """Stop probability after loop step (1-based); index feature is step/(k_norm-1)."""
    b, t, d = h.shape
    idx_val = step / (k_norm - 1)
    idx_col = T.Tensor(np.full((b, t, 1), idx_val, dtype=h.data.dtype))
    feat = T.concat_last(h, idx_col)
    logit = T.add(T.matmul(feat, T.reshape(weight, (d + 1, 1))), bias)
    return T.sigmoid(logit)  # [B, T, 1]


def deep_path(x: Tensor, store: ParameterStore, prefix: str, cfg: ModelConfig,
              mask: np.ndarray, positions: np.ndarray,
              forced_k: int | None = None,
              gain_override: float | None = None):
    """Run the looped sublayer and fold states with the halting router.

    Returns (h_deep, stop_probs) where stop_probs is a list of [B, T, 1]
    tensors, one per non-final step (empty when the loop runs once).
    Forcing more loops than were trained reuses the last trained gain;
    the router's step index renormalizes to the forced count.
    """
    sp = SublayerParams.from_store(store, f"{prefix}.deep")
    gain_logits = store[f"{prefix}.deep.gain_logits"]
    trained_k = gain_logits.shape[0]
    k_eff = trained_k if forced_k is None else forced_k
    r_weight = store[f"{prefix}.router.weight"]
    r_bias = store[f"{prefix}.router.bias"]

    h = x
    states = []
    stop_probs = []
    for step in range(1, k_eff + 1):
        logit_idx = min(step, trained_k) - 1
        s = T.softplus(T.slice_last(gain_logits, logit_idx, logit_idx + 1))
        if gain_override is not None:
            s = T.Tensor(np.full((1,), gain_override, dtype=x.data.dtype))
        h = sublayer(h, sp, s, cfg, mask, positions)
        states.append(h)
        if step < k_eff:
            stop_probs.append(_router_prob(h, step, k_eff, r_weight, r_bias))

    mixed = states[-1]
    for i in range(k_eff - 2, -1, -1):
        mixed = T.add(mixed, T.row_scale(T.sub(states[i], mixed), stop_probs[i]))
    return mixed, stop_probs


def wide_path(x: Tensor, store: ParameterStore, prefix: str, cfg: ModelConfig,
              mask: np.ndarray, positions: np.ndarray,
              gain_override: float | None = None) -> Tensor:
    """Single full-width sublayer pass."""
    sp = SublayerParams.from_store(store, f"{prefix}.wide")
    s = T.softplus(store[f"{prefix}.wide.gain_logit"])
    if gain_override is not None:
        s = T.Tensor(np.full((1,), gain_override, dtype=x.data.dtype))
    return sublayer(x, sp, s, cfg, mask, positions)


def gate_values(x: Tensor, store: ParameterStore, prefix: str,
                gate_override: tuple | None = None,
                perms: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
    """Per-token path gates (g_d, g_w), each [B, T, 1].

    Overrides replace a gate with a constant after the learned values are
    computed; a shuffle permutes (g_d, g_w) pairs across token positions
    within each sequence, pairs intact.
    """
    logits = T.add(T.matmul(x, store[f"{prefix}.gate.weight"]), store[f"{prefix}.gate.bias"])
    g = T.sigmoid(logits)  # [B, T, 2]
    if perms is not None:
        g = T.permute_tokens(g, perms)
    g_d = T.slice_last(g, 0, 1)
    g_w = T.slice_last(g, 1, 2)
    if gate_override is not None:
        od, ow = gate_override
        b, t, _ = x.shape
        if od is not None:
            g_d = T.Tensor(np.full((b, t, 1), od, dtype=x.data.dtype))
        if ow is not None:
            g_w = T.Tensor(np.full((b, t, 1), ow, dtype=x.data.dtype))
    return g_d, g_w


def block_forward(x: Tensor, store: ParameterStore, layer: int, cfg: ModelConfig,
                  mask: np.ndarray, positions: np.ndarray,
                  forced_k: int | None = None,
                  gate_override: tuple | None = None,
                  perms: np.ndarray | None = None,
                  gain_override: float | None = None,
                  collector=None, token_ids: np.ndarray | None = None,
                  seq_ids: np.ndarray | None = None) -> Tensor:
    """One layer of the configured variant; the gated sum IS the output."""
    prefix = f"layers.{layer}"
    if cfg.variant == "pureloop":
        h_deep, _ = deep_path(x, store, prefix, cfg, mask, positions,
                              forced_k=forced_k, gain_override=gain_override)
        return h_deep
    if cfg.variant == "purewide":
        return wide_path(x, store, prefix, cfg, mask, positions,
                         gain_override=gain_override)
    h_deep, stop_probs = deep_path(x, store, prefix, cfg, mask, positions,
                                   forced_k=forced_k, gain_override=gain_override)
    h_wide = wide_path(x, store, prefix, cfg, mask, positions,
                       gain_override=gain_override)
    g_d, g_w = gate_values(x, store, prefix, gate_override=gate_override, perms=perms)
    y = T.add(T.row_scale(h_deep, g_d), T.row_scale(h_wide, g_w))
    if collector is not None:
        collector.record_layer(
            layer=layer, x=x.data, h_deep=h_deep.data, h_wide=h_wide.data,
            g_d=g_d.data[..., 0], g_w=g_w.data[..., 0],
            stop_probs=[q.data[..., 0] for q in stop_probs],
            token_ids=token_ids, seq_ids=seq_ids,
        )
    return y


def init_block(store: ParameterStore, layer: int, cfg: ModelConfig,
               rng: np.random.Generator, dtype) -> None:
    """Create one layer's parameters in draw-stable order."""
    prefix = f"layers.{layer}"
    if cfg.variant in ("dual", "pureloop"):
        SublayerParams.init(store, f"{prefix}.deep", cfg, cfg.d_ffn_deep, rng, dtype)
        store.add(f"{prefix}.deep.gain_logits",
                  const_init((cfg.k,), GAIN_LOGIT_INIT, dtype))
        store.add(f"{prefix}.router.weight", const_init((cfg.d + 1,), 0.0, dtype))
        store.add(f"{prefix}.router.bias", const_init((1,), ROUTER_BIAS_INIT, dtype))
    if cfg.variant in ("dual", "purewide"):
        SublayerParams.init(store, f"{prefix}.wide", cfg, cfg.d_ffn_wide, rng, dtype)
        store.add(f"{prefix}.wide.gain_logit", const_init((1,), GAIN_LOGIT_INIT, dtype))
    if cfg.variant == "dual":
        store.add(f"{prefix}.gate.weight", const_init((cfg.d, 2), 0.0, dtype))
        store.add(f"{prefix}.gate.bias", const_init((2,), 0.0, dtype))
