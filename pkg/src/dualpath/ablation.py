"""Inference-time interventions: forced loop counts, gate overrides, and
within-sequence gate shuffles, evaluated against the unmodified model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .data import chunk_sequences
from .params import ParameterStore
from .train import evaluate_bpb


class AblationError(ValueError):
    """Unparseable or invalid ablation request."""


@dataclass
class Ablation:
    """One intervention; exactly one of the three knobs is set."""

    forced_k: int | None = None
    gate_override: tuple[float | None, float | None] | None = None
    shuffle_seed: int | None = None

    def describe(self) -> str:
        if self.forced_k is not None:
            return f"force-loops:{self.forced_k}"
        if self.gate_override is not None:
            od, ow = self.gate_override
            return "gates:{},{}".format("" if od is None else od,
                                        "" if ow is None else ow)
        if self.shuffle_seed is not None:
            return f"shuffle:seed={self.shuffle_seed}"
        return "baseline"


def parse_ablation(spec: str) -> Ablation:
    """Parse specs like ``force-loops:6``, ``gates:1,0``, ``gates:,0.5``,
    or ``shuffle:seed=7``."""
    spec = spec.strip()
    if ":" not in spec:
        raise AblationError(f"bad ablation spec {spec!r}: expected kind:args")
    kind, args = spec.split(":", 1)
    kind = kind.strip().lower()
    if kind in ("force-loops", "force_loops"):
        try:
            k = int(args)
        except ValueError:
            raise AblationError(f"force-loops needs an integer, got {args!r}") from None
        if k < 1:
            raise AblationError(f"forced loop count must be >= 1, got {k}")
        return Ablation(forced_k=k)
    if kind == "gates":
        parts = args.split(",")
        if len(parts) != 2:
            raise AblationError(f"gates needs two comma slots, got {args!r}")
        vals = []
        for p in parts:
            p = p.strip()
            if p == "":
                vals.append(None)
                continue
            try:
                v = float(p)
            except ValueError:
                raise AblationError(f"gate override must be numeric, got {p!r}") from None
            if not (0.0 <= v <= 1.0):
                raise AblationError(f"gate override {v} outside [0, 1]")
            vals.append(v)
        if vals[0] is None and vals[1] is None:
            raise AblationError("gates override needs at least one value")
        return Ablation(gate_override=(vals[0], vals[1]))
    if kind == "shuffle":
        args = args.strip()
        if args.startswith("seed="):
            args = args[5:]
        try:
            seed = int(args)
        except ValueError:
            raise AblationError(f"shuffle needs seed=<int>, got {args!r}") from None
        return Ablation(shuffle_seed=seed)
    raise AblationError(f"unknown ablation kind {kind!r}")


def validate_ablation(ab: Ablation, cfg: ModelConfig) -> None:
    if (ab.gate_override is not None or ab.shuffle_seed is not None) \
            and cfg.variant != "dual":
        raise AblationError(f"{ab.describe()} requires the dual variant, model is {cfg.variant}")
    if ab.forced_k is not None and cfg.variant == "purewide":
        raise AblationError("force-loops requires a looped path")


def evaluate_ablation(store: ParameterStore, cfg: ModelConfig, corpus: np.ndarray,
                      ablation: Ablation | None, seq_len: int,
                      batch_size: int = 8, limit: int | None = None) -> dict:
    """Mean per-token loss under an intervention (None = baseline)."""
    windows = chunk_sequences(corpus, seq_len)
    if limit is not None:
        windows = windows[:limit]
    flat = windows.reshape(-1)
    kwargs: dict = {}
    if ablation is not None:
        validate_ablation(ablation, cfg)
        kwargs = {"forced_k": ablation.forced_k,
                  "gate_override": ablation.gate_override,
                  "shuffle_seed": ablation.shuffle_seed}
    metrics = evaluate_bpb(store, cfg, flat, seq_len, batch_size, **kwargs)
    return {
        "spec": "baseline" if ablation is None else ablation.describe(),
        "loss_nats": metrics["mean_nats"],
        "bpb": metrics["bpb"],
        "total_bytes": metrics["total_bytes"],
    }


def ablation_report(store: ParameterStore, cfg: ModelConfig, corpus: np.ndarray,
                    ablation: Ablation, seq_len: int, batch_size: int = 8,
                    limit: int | None = None) -> dict:
    """Intervention beside its baseline, with the loss delta."""
    base = evaluate_ablation(store, cfg, corpus, None, seq_len, batch_size, limit)
    abl = evaluate_ablation(store, cfg, corpus, ablation, seq_len, batch_size, limit)
    return {
        "baseline_loss_nats": base["loss_nats"],
        "spec": abl["spec"],
        "loss_nats": abl["loss_nats"],
        "delta_nats": abl["loss_nats"] - base["loss_nats"],
        "baseline_bpb": base["bpb"],
        "bpb": abl["bpb"],
    }
