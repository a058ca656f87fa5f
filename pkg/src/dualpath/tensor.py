"""Dense tensors with a reverse-mode gradient tape.

Values are contiguous row-major numpy arrays in float32 or float64. Every
operation returns a fresh array (no views escape an op), so downstream code
can rely on independent buffers. A Tape records one backward rule per
executed op; replaying the tape in reverse accumulates gradients into leaf
tensors. Intermediate gradients live only for the duration of one
``Tape.backward`` call, so calling backward twice doubles every leaf
gradient exactly.
"""
from __future__ import annotations

import numpy as np


class TensorError(Exception):
    """Base class for tensor-level failures."""


class ShapeError(TensorError):
    """Operands have incompatible shapes or ranks."""


class DtypeError(TensorError):
    """Operands mix float32 and float64."""


class DomainError(TensorError):
    """An input lies outside an op's mathematical domain."""


class NonFiniteError(TensorError):
    """A stored value is NaN or infinite."""


_FLOAT_DTYPES = (np.float32, np.float64)
_FINITE_CHECKS = True


def set_finite_checks(enabled: bool) -> bool:
    """Toggle NaN/inf validation on tensor construction; returns the old setting."""
    global _FINITE_CHECKS
    previous = _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)
    return previous


class Tensor:
    """A numpy array plus gradient bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad", "_leaf")

    def __init__(self, data, dtype=None, requires_grad: bool = False, _leaf: bool = True):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32 if dtype is None else dtype)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        if _FINITE_CHECKS and not np.isfinite(arr).all():
            raise NonFiniteError("tensor holds non-finite values")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._leaf = _leaf

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _coerce(other, self))

    def __radd__(self, other):
        return add(_coerce(other, self), self)

    def __sub__(self, other):
        return sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return sub(_coerce(other, self), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _coerce(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


class Tape:
    """Execution-order record of backward rules.

    Usage::

        with Tape() as tape:
            loss = forward(...)
        tape.backward(loss)

    Replay visits every recorded op exactly once, newest first. Leaf
    gradients accumulate across backward calls; intermediates do not.
    """

    def __init__(self):
        self._records: list = []

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _TAPES.pop()
        if popped is not self:
            raise TensorError("tape stack corrupted")

    def __len__(self) -> int:
        return len(self._records)

    def record(self, out: Tensor, pullbacks: list) -> None:
        self._records.append((out, pullbacks))

    def backward(self, root: Tensor) -> None:
        if root.data.size != 1:
            raise ShapeError(f"backward from non-scalar of shape {root.shape}")
        grads: dict[Tensor, np.ndarray] = {root: np.ones_like(root.data)}
        for out, pullbacks in reversed(self._records):
            dy = grads.pop(out, None)
            if dy is None:
                continue
            for inp, pull in pullbacks:
                if not inp.requires_grad:
                    continue
                contrib = pull(dy)
                held = grads.get(inp)
                grads[inp] = contrib if held is None else held + contrib
        for t, g in grads.items():
            if t._leaf and t.requires_grad:
                t.grad = np.ascontiguousarray(g) if t.grad is None else t.grad + g


_TAPES: list[Tape] = []


def active_tape() -> Tape | None:
    return _TAPES[-1] if _TAPES else None


def _result(out_data: np.ndarray, pullbacks: list) -> Tensor:
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t, _ in pullbacks)
    out = Tensor(out_data, requires_grad=needs, _leaf=False)
    if needs:
        tape.record(out, pullbacks)
    return out


def _check_same_dtype(*tensors: Tensor) -> None:
    dt = tensors[0].dtype
    for t in tensors[1:]:
        if t.dtype != dt:
            raise DtypeError(f"mixed dtypes {dt} and {t.dtype}")


def tensor(data, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.array(data, dtype=dtype), requires_grad=requires_grad)


def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def ones(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)


# ---------------------------------------------------------------------------
# binary ops


def _broadcast_kind(a: Tensor, b: Tensor) -> str:
    """Classify the supported broadcast: same shape, trailing dims, or scalar."""
    if a.shape == b.shape:
        return "same"
    if b.size == 1:
        return "scalar"
    if b.ndim <= a.ndim and a.shape[a.ndim - b.ndim:] == b.shape:
        return "trailing"
    raise ShapeError(f"cannot broadcast {b.shape} onto {a.shape}")


def _reduce_to(kind: str, b_shape: tuple, dy: np.ndarray) -> np.ndarray:
    """Sum dy down to b_shape according to the broadcast kind."""
    if kind == "same":
        return dy
    if kind == "scalar":
        return dy.sum().reshape(b_shape)
    extra = dy.ndim - len(b_shape)
    if extra > 0:
        dy = dy.sum(axis=tuple(range(extra)))
    return np.ascontiguousarray(dy).reshape(b_shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    kind = _broadcast_kind(a, b)
    bd = b.data.reshape(()) if kind == "scalar" else b.data
    return _result(a.data + bd, [
        (a, lambda dy: dy),
        (b, lambda dy: _reduce_to(kind, b.shape, dy)),
    ])


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    kind = _broadcast_kind(a, b)
    bd = b.data.reshape(()) if kind == "scalar" else b.data
    return _result(a.data - bd, [
        (a, lambda dy: dy),
        (b, lambda dy: -_reduce_to(kind, b.shape, dy)),
    ])


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    kind = _broadcast_kind(a, b)
    bd = b.data.reshape(()) if kind == "scalar" else b.data
    ad = a.data
    return _result(ad * bd, [
        (a, lambda dy: dy * bd),
        (b, lambda dy: _reduce_to(kind, b.shape, dy * ad)),
    ])


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return _result(x.data * x.data.dtype.type(c), [(x, lambda dy: dy * c)])


def row_scale(x: Tensor, s: Tensor) -> Tensor:
    """Multiply each last-axis row of x by a per-row scalar from s.

    s has shape x.shape[:-1] or x.shape[:-1] + (1,).
    """
    _check_same_dtype(x, s)
    if s.shape == x.shape[:-1]:
        sd = s.data[..., None]
    elif s.shape == x.shape[:-1] + (1,):
        sd = s.data
    else:
        raise ShapeError(f"row_scale: s {s.shape} does not match rows of x {x.shape}")
    xd = x.data

    def pull_s(dy):
        g = (dy * xd).sum(axis=-1)
        return g.reshape(s.shape)

    return _result(xd * sd, [(x, lambda dy: dy * sd), (s, pull_s)])


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product: 2D @ 2D, ND @ 2D (flattened over leading axes), or batched 3D @ 3D."""
    _check_same_dtype(a, b)
    if a.ndim >= 2 and b.ndim == 2:
        if a.shape[-1] != b.shape[0]:
            raise ShapeError(f"matmul: inner dims {a.shape} @ {b.shape}")
        lead = a.shape[:-1]
        a2 = a.data.reshape(-1, a.shape[-1])
        out = a2 @ b.data
        return _result(out.reshape(lead + (b.shape[1],)), [
            (a, lambda dy: (dy.reshape(-1, b.shape[1]) @ b.data.T).reshape(a.shape)),
            (b, lambda dy: a2.T @ dy.reshape(-1, b.shape[1])),
        ])
    if a.ndim == 3 and b.ndim == 3:
        if a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
            raise ShapeError(f"matmul: batched dims {a.shape} @ {b.shape}")
        out = a.data @ b.data
        return _result(out, [
            (a, lambda dy: dy @ b.data.transpose(0, 2, 1)),
            (b, lambda dy: a.data.transpose(0, 2, 1) @ dy),
        ])
    raise ShapeError(f"matmul: unsupported ranks {a.shape} @ {b.shape}")


def concat_last(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the last axis."""
    _check_same_dtype(a, b)
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat_last: {a.shape} vs {b.shape}")
    na = a.shape[-1]
    out = np.concatenate([a.data, b.data], axis=-1)
    return _result(out, [
        (a, lambda dy: dy[..., :na]),
        (b, lambda dy: dy[..., na:]),
    ])


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    """Copy of x[..., start:stop]."""
    n = x.shape[-1]
    if not (0 <= start < stop <= n):
        raise ShapeError(f"slice_last [{start}:{stop}] on last dim {n}")

    def pull(dy):
        dx = np.zeros(x.shape, dtype=dy.dtype)
        dx[..., start:stop] = dy
        return dx

    return _result(x.data[..., start:stop].copy(), [(x, pull)])


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def sigmoid(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = 1.0 / (1.0 + np.exp(-x.data))
    return _result(out, [(x, lambda dy: dy * out * (1.0 - out))])


def silu(x: Tensor) -> Tensor:
    """x * sigmoid(x)."""
    with np.errstate(over="ignore"):
        sig = 1.0 / (1.0 + np.exp(-x.data))
    out = x.data * sig
    return _result(out, [(x, lambda dy: dy * sig * (1.0 + x.data * (1.0 - sig)))])


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return _result(out, [(x, lambda dy: dy * out)])


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise DomainError("log of non-positive value")
    return _result(np.log(x.data), [(x, lambda dy: dy / x.data)])


def softplus(x: Tensor) -> Tensor:
    """log(1 + exp(x)), overflow-safe for large |x|."""
    out = np.logaddexp(x.data.dtype.type(0), x.data)
    with np.errstate(over="ignore"):
        sig = 1.0 / (1.0 + np.exp(-x.data))
    return _result(out, [(x, lambda dy: dy * sig)])


# ---------------------------------------------------------------------------
# reductions and shape ops


def tsum(x: Tensor) -> Tensor:
    return _result(np.asarray(x.data.sum(), dtype=x.dtype), [
        (x, lambda dy: np.full(x.shape, dy.reshape(()), dtype=x.data.dtype)),
    ])


def tmean(x: Tensor) -> Tensor:
    n = x.size
    return _result(np.asarray(x.data.mean(), dtype=x.dtype), [
        (x, lambda dy: np.full(x.shape, dy.reshape(()) / n, dtype=x.data.dtype)),
    ])


def reshape(x: Tensor, shape: tuple) -> Tensor:
    out = x.data.reshape(shape).copy()
    return _result(out, [(x, lambda dy: dy.reshape(x.shape))])


def transpose(x: Tensor, axes: tuple) -> Tensor:
    inv = tuple(np.argsort(axes))
    out = np.ascontiguousarray(np.transpose(x.data, axes))
    return _result(out, [(x, lambda dy: np.ascontiguousarray(np.transpose(dy, inv)))])


# ---------------------------------------------------------------------------
# structured ops


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: out[..., :] = table[ids[...], :]."""
    ids = np.asarray(ids)
    if ids.dtype.kind not in "iu":
        raise DomainError("embedding ids must be integers")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DomainError(f"embedding id out of range [0, {table.shape[0]})")

    def pull(dy):
        dt = np.zeros(table.shape, dtype=dy.dtype)
        np.add.at(dt, ids.reshape(-1), dy.reshape(-1, table.shape[1]))
        return dt

    return _result(table.data[ids], [(table, pull)])


def rmsnorm(x: Tensor, gain: Tensor, eps: float = 1e-6) -> Tensor:
    """x / sqrt(mean(x^2, last) + eps) * gain, normalizing the last axis."""
    _check_same_dtype(x, gain)
    if gain.shape != (x.shape[-1],):
        raise ShapeError(f"rmsnorm gain {gain.shape} vs last dim {x.shape[-1]}")
    n = x.shape[-1]
    ms = (x.data * x.data).mean(axis=-1, keepdims=True)
    r = 1.0 / np.sqrt(ms + x.data.dtype.type(eps))
    xn = x.data * r
    out = xn * gain.data

    def pull_x(dy):
        dg = dy * gain.data
        inner = (dg * x.data).sum(axis=-1, keepdims=True)
        return r * dg - (r ** 3 / n) * x.data * inner

    def pull_gain(dy):
        return _reduce_to("trailing", gain.shape, dy * xn)

    return _result(out, [(x, pull_x), (gain, pull_gain)])


def masked_softmax(x: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over the last axis with a boolean keep-mask.

    Masked positions get probability exactly 0; the max subtraction runs
    over unmasked entries only. A row with no unmasked entry is an error.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape[-mask.ndim:]:
        raise ShapeError(f"mask {mask.shape} does not align with {x.shape}")
    # broadcasting only repeats rows, so checking the mask itself suffices
    if not mask.any(axis=-1).all():
        raise DomainError("masked_softmax: a row is fully masked")
    neg = np.where(mask, x.data, x.data.dtype.type(-np.inf))
    m = neg.max(axis=-1, keepdims=True)
    np.subtract(neg, m, out=neg)
    # exp(-inf) is exactly 0, so masked entries need no second pass
    e = np.exp(neg, out=neg)
    out = e / e.sum(axis=-1, keepdims=True)

    def pull(dy):
        dot = (dy * out).sum(axis=-1, keepdims=True)
        return out * (dy - dot)

    return _result(out, [(x, pull)])


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Per-row cross-entropy in nats: out[i] = -log softmax(logits[i])[targets[i]]."""
    targets = np.asarray(targets)
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy expects 2D logits, got {logits.shape}")
    if targets.shape != (logits.shape[0],):
        raise ShapeError(f"targets {targets.shape} vs logits rows {logits.shape[0]}")
    if targets.dtype.kind not in "iu":
        raise DomainError("targets must be integers")
    if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise DomainError(f"target id out of range [0, {logits.shape[1]})")
    z = logits.data
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    denom = e.sum(axis=-1, keepdims=True)
    logp = (z - m) - np.log(denom)
    rows = np.arange(z.shape[0])
    out = -logp[rows, targets]

    def pull(dy):
        p = e / denom
        p[rows, targets] -= 1.0
        return p * dy[:, None]

    return _result(out, [(logits, pull)])


_ROPE_TABLES: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _rope_tables(positions: np.ndarray, dh: int, base: float, dt) -> tuple:
    """cos/sin tables shaped [T, 1, half], cached across identical calls."""
    key = (positions.tobytes(), dh, float(base), np.dtype(dt).str)
    hit = _ROPE_TABLES.get(key)
    if hit is not None:
        return hit
    half = dh // 2
    inv = base ** (-np.arange(half, dtype=np.float64) * 2.0 / dh)
    theta = positions[:, None].astype(np.float64) * inv[None, :]
    cos = np.cos(theta).astype(dt)[:, None, :]
    sin = np.sin(theta).astype(dt)[:, None, :]
    cos.flags.writeable = False
    sin.flags.writeable = False
    if len(_ROPE_TABLES) >= 16:
        _ROPE_TABLES.clear()
    _ROPE_TABLES[key] = (cos, sin)
    return cos, sin


def rope(x: Tensor, positions: np.ndarray, base: float = 10000.0) -> Tensor:
    """Rotary position embedding over the last axis of [..., T, H, d_head].

    Adjacent pairs (2i, 2i+1) rotate by angle pos / base^(2i/d_head);
    positions index the T axis (third from the end).
    """
    dh = x.shape[-1]
    t = x.shape[-3]
    positions = np.asarray(positions)
    if dh % 2 != 0:
        raise ShapeError(f"rope head dim {dh} must be even")
    if positions.shape != (t,):
        raise ShapeError(f"rope positions {positions.shape} vs sequence length {t}")
    cos, sin = _rope_tables(positions, dh, base, x.data.dtype)
    ev = x.data[..., 0::2]
    od = x.data[..., 1::2]
    out = np.empty_like(x.data)
    out[..., 0::2] = ev * cos - od * sin
    out[..., 1::2] = ev * sin + od * cos

    def pull(dy):
        de = dy[..., 0::2]
        do = dy[..., 1::2]
        dx = np.empty_like(dy)
        dx[..., 0::2] = de * cos + do * sin
        dx[..., 1::2] = -de * sin + do * cos
        return dx

    return _result(out, [(x, pull)])


def repeat_heads(x: Tensor, reps: int) -> Tensor:
    """Repeat axis 1 of [B, H, T, d] blockwise: head h fans out to reps slots."""
    if x.ndim != 4:
        raise ShapeError(f"repeat_heads expects 4D, got {x.shape}")
    if reps < 1:
        raise ShapeError(f"reps must be >= 1, got {reps}")
    if reps == 1:
        return _result(x.data.copy(), [(x, lambda dy: dy)])
    b, h, t, dh = x.shape
    out = np.repeat(x.data, reps, axis=1)
    return _result(out, [
        (x, lambda dy: dy.reshape(b, h, reps, t, dh).sum(axis=2)),
    ])


def permute_tokens(x: Tensor, perms: np.ndarray) -> Tensor:
    """Permute axis -2 per batch element: out[b, t] = x[b, perms[b, t]]."""
    perms = np.asarray(perms)
    if x.ndim != 3 or perms.shape != x.shape[:2]:
        raise ShapeError(f"permute_tokens: perms {perms.shape} vs x {x.shape}")
    b_idx = np.arange(x.shape[0])[:, None]
    out = x.data[b_idx, perms]

    def pull(dy):
        dx = np.zeros_like(dy)
        dx[b_idx, perms] = dy
        return dx

    return _result(out, [(x, pull)])


def causal_mask(t: int) -> np.ndarray:
    """Boolean [T, T] keep-mask: position i may attend to j <= i."""
    return np.tril(np.ones((t, t), dtype=bool))
