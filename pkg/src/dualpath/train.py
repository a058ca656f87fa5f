"""AdamW training with a warmup-cosine schedule and bit-reproducible resume.

Every run is a pure function of (model config, train config, corpus):
weights come from the model seed, batch offsets from (seed, step), and the
optimizer carries no hidden state beyond its moments, so a run resumed
from any checkpoint retraces the original trajectory bit for bit.
"""
from __future__ import annotations

import csv
import math
import os

import numpy as np

from . import tensor as T
from .config import ModelConfig, TrainConfig
from .data import batch_offsets, batch_windows, chunk_sequences, split_holdout
from .model import init_parameters, model_forward, sequence_loss
from .params import ParameterStore, load_checkpoint, save_checkpoint
from .tensor import NonFiniteError, Tape


class TrainingError(RuntimeError):
    """Training aborted; the last good checkpoint is preserved."""


def lr_at(step: int, cfg: TrainConfig) -> float:
    """Linear warmup to the peak, then cosine decay to the final rate.

    step counts completed steps: lr_at(0) is the first step's rate and
    lr_at(total_steps) the schedule's endpoint.
    """
    if step <= cfg.warmup_steps:
        frac = step / cfg.warmup_steps
        return cfg.init_lr + (cfg.peak_lr - cfg.init_lr) * frac
    span = cfg.total_steps - cfg.warmup_steps
    frac = (step - cfg.warmup_steps) / span
    return cfg.final_lr + 0.5 * (cfg.peak_lr - cfg.final_lr) * (1.0 + math.cos(math.pi * frac))


def decays_weight(name: str, tensor) -> bool:
    """Decay applies to matrices only, and never to embeddings or the head."""
    if tensor.ndim < 2:
        return False
    return name not in ("embed.weight", "head.weight")


def init_moments(store: ParameterStore) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    return {name: (np.zeros(t.shape, dtype=t.data.dtype),
                   np.zeros(t.shape, dtype=t.data.dtype))
            for name, t in store.items()}


def clip_global_norm(store: ParameterStore, max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = 0.0
    for _, t in store.items():
        if t.grad is not None:
            total += float((t.grad.astype(np.float64) ** 2).sum())
    norm = math.sqrt(total)
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for _, t in store.items():
            if t.grad is not None:
                t.grad = t.grad * t.data.dtype.type(factor)
    return norm


def adamw_step(store: ParameterStore, moments: dict, t_step: int, lr: float,
               cfg: TrainConfig) -> None:
    """One decoupled-decay Adam update; t_step is 1-based."""
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1 ** t_step
    bc2 = 1.0 - b2 ** t_step
    for name, p in store.items():
        g = p.grad
        if g is None:
            g = np.zeros(p.shape, dtype=p.data.dtype)
        m, v = moments[name]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        moments[name] = (m, v)
        update = (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)
        new = p.data - lr * update
        if cfg.weight_decay and decays_weight(name, p):
            new = new - lr * cfg.weight_decay * p.data
        p.data = new.astype(p.data.dtype)


def _moments_to_store(store: ParameterStore, moments: dict) -> ParameterStore:
    out = ParameterStore()
    for name, t in store.items():
        out.add(name, T.Tensor(t.data, requires_grad=True))
    for name, (m, v) in moments.items():
        out.add(f"opt.m.{name}", T.Tensor(m))
        out.add(f"opt.v.{name}", T.Tensor(v))
    return out


def _split_train_state(full: ParameterStore) -> tuple[ParameterStore, dict]:
    store = ParameterStore()
    moments: dict = {}
    for name, t in full.items():
        if name.startswith("opt.m."):
            moments.setdefault(name[6:], [None, None])[0] = t.data
        elif name.startswith("opt.v."):
            moments.setdefault(name[6:], [None, None])[1] = t.data
        else:
            store.add(name, t)
    return store, {k: (m, v) for k, (m, v) in moments.items()}


def save_train_checkpoint(path: str, store: ParameterStore, moments: dict,
                          step: int, model_cfg: ModelConfig, train_cfg: TrainConfig) -> None:
    meta = {"step": step, "model": model_cfg.to_dict(), "train": train_cfg.to_dict(),
            "config_hash": model_cfg.hash()}
    save_checkpoint(path, _moments_to_store(store, moments), meta)


def load_train_checkpoint(path: str):
    full, meta = load_checkpoint(path)
    store, moments = _split_train_state(full)
    model_cfg = ModelConfig.from_dict(meta["model"])
    train_cfg = TrainConfig.from_dict(meta["train"])
    return store, moments, meta["step"], model_cfg, train_cfg


def load_model_checkpoint(path: str) -> tuple[ParameterStore, ModelConfig, dict]:
    """Model weights only; optimizer tensors are dropped."""
    full, meta = load_checkpoint(path)
    store, _ = _split_train_state(full)
    return store, ModelConfig.from_dict(meta["model"]), meta


def train(model_cfg: ModelConfig, train_cfg: TrainConfig, corpus: np.ndarray,
          out_dir: str, resume: str | None = None, quiet: bool = False) -> dict:
    """Train on the leading corpus slice; returns paths and final metrics."""
    os.makedirs(out_dir, exist_ok=True)
    dtype = np.float32 if train_cfg.precision == "float32" else np.float64
    train_ids, holdout_ids = split_holdout(corpus, train_cfg.holdout_bytes)

    if resume is not None:
        store, moments, start_step, ck_model, ck_train = load_train_checkpoint(resume)
        if ck_model.to_dict() != model_cfg.to_dict():
            raise TrainingError("checkpoint model config does not match the requested one")
        if ck_train.to_dict() != train_cfg.to_dict():
            raise TrainingError("checkpoint train config does not match the requested one")
    else:
        store = init_parameters(model_cfg, seed=train_cfg.seed, dtype=dtype)
        moments = init_moments(store)
        start_step = 0

    curve_path = os.path.join(out_dir, "loss_curve.csv")
    mode = "a" if resume is not None and os.path.exists(curve_path) else "w"
    curve = open(curve_path, mode, newline="")
    writer = csv.writer(curve)
    if mode == "w":
        writer.writerow(["step", "lr", "loss_nats"])

    final_path = os.path.join(out_dir, "final.ckpt")
    last_good = resume
    # per-tensor finite scans cost more than the training math at this
    # scale; the explicit per-step loss check below still catches blowups
    checks_were = T.set_finite_checks(False)
    try:
        for step in range(start_step, train_cfg.total_steps):
            lr = lr_at(step, train_cfg)
            offsets = batch_offsets(train_ids.size, train_cfg.batch_size,
                                    train_cfg.seq_len, train_cfg.seed, step)
            windows = batch_windows(train_ids, offsets, train_cfg.seq_len)
            inputs, targets = windows[:, :-1], windows[:, 1:]
            try:
                with Tape() as tape:
                    logits = model_forward(inputs, store, model_cfg)
                    loss = sequence_loss(logits, targets)
                loss_val = loss.item()
                if not math.isfinite(loss_val):
                    raise NonFiniteError("non-finite loss")
                tape.backward(loss)
            except NonFiniteError as e:
                curve.close()
                raise TrainingError(
                    f"aborted at step {step}: {e}; last checkpoint: {last_good}") from e
            if train_cfg.grad_clip > 0:
                clip_global_norm(store, train_cfg.grad_clip)
            adamw_step(store, moments, step + 1, lr, train_cfg)
            store.zero_grad()
            writer.writerow([step, repr(lr), repr(loss_val)])
            if not quiet and (step % train_cfg.log_every == 0 or step == train_cfg.total_steps - 1):
                print(f"step {step:6d}  lr {lr:.3e}  loss {loss_val:.4f}", flush=True)
            done = step + 1
            if done % train_cfg.checkpoint_every == 0 and done < train_cfg.total_steps:
                ck = os.path.join(out_dir, f"step{done:06d}.ckpt")
                save_train_checkpoint(ck, store, moments, done, model_cfg, train_cfg)
                last_good = ck
    finally:
        T.set_finite_checks(checks_were)
        curve.close()
    save_train_checkpoint(final_path, store, moments, train_cfg.total_steps,
                          model_cfg, train_cfg)
    metrics = evaluate_bpb(store, model_cfg, holdout_ids,
                           train_cfg.seq_len, train_cfg.batch_size)
    return {"final_checkpoint": final_path, "loss_curve": curve_path,
            "holdout": metrics}


def bits_per_byte(total_nats: float, total_bytes: int) -> float:
    if total_bytes <= 0:
        raise ValueError("total_bytes must be positive")
    return (total_nats / math.log(2.0)) / total_bytes


def evaluate_bpb(store: ParameterStore, model_cfg: ModelConfig, corpus: np.ndarray,
                 seq_len: int, batch_size: int = 8,
                 forced_k: int | None = None,
                 gate_override: tuple | None = None,
                 shuffle_seed: int | None = None) -> dict:
    """Teacher-forced next-byte loss over non-overlapping windows."""
    windows = chunk_sequences(corpus, seq_len)
    total_nats = 0.0
    total_bytes = 0
    for lo in range(0, windows.shape[0], batch_size):
        chunk = windows[lo:lo + batch_size]
        inputs, targets = chunk[:, :-1], chunk[:, 1:]
        logits = model_forward(inputs, store, model_cfg, forced_k=forced_k,
                               gate_override=gate_override, shuffle_seed=shuffle_seed,
                               seq_ids=np.arange(lo, lo + chunk.shape[0]))
        flat = T.reshape(logits, (inputs.size, model_cfg.vocab))
        nats = T.cross_entropy(flat, targets.reshape(-1))
        total_nats += float(nats.data.sum(dtype=np.float64))
        total_bytes += int(targets.size)
    return {
        "total_nats": total_nats,
        "total_bytes": total_bytes,
        "mean_nats": total_nats / total_bytes,
        "bpb": bits_per_byte(total_nats, total_bytes),
    }
