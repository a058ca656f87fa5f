"""Named parameter collections and single-file checkpoints.

Checkpoint layout: magic ``DPV1``, a little-endian uint32 manifest length,
a JSON manifest, then one contiguous blob of little-endian scalars. The
manifest records each tensor's shape, dtype, and byte offset into the blob
in store order, plus a free-form ``meta`` dict for step counters, configs,
and optimizer state labels.
"""
from __future__ import annotations

import json
import struct
from collections import OrderedDict

import numpy as np

from .tensor import NonFiniteError, Tensor

MAGIC = b"DPV1"

_DTYPE_CODES = {"float32": "<f4", "float64": "<f8"}


class CheckpointError(Exception):
    """A checkpoint file is malformed or truncated."""


class ParameterStore:
    """Ordered mapping from dotted names to parameter tensors."""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name!r}")
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self):
        return self._params.values()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def total_params(self) -> int:
        return sum(t.size for t in self._params.values())

    def astype(self, dtype) -> "ParameterStore":
        """Copy of the store with every tensor cast to dtype."""
        out = ParameterStore()
        for name, t in self._params.items():
            out.add(name, Tensor(t.data.astype(dtype), requires_grad=t.requires_grad))
        return out

    def subset(self, keep) -> "ParameterStore":
        """Copy holding only names for which keep(name) is true; shares no buffers."""
        out = ParameterStore()
        for name, t in self._params.items():
            if keep(name):
                out.add(name, Tensor(t.data.copy(), requires_grad=t.requires_grad))
        return out


def normal_init(rng: np.random.Generator, shape, std: float, dtype) -> Tensor:
    """Gaussian init drawn in float64 then cast, so the stream is dtype-stable."""
    data = (rng.standard_normal(shape) * std).astype(dtype)
    return Tensor(data, requires_grad=True)


def const_init(shape, value: float, dtype) -> Tensor:
    return Tensor(np.full(shape, value, dtype=dtype), requires_grad=True)


def save_checkpoint(path: str, store: ParameterStore, meta: dict) -> None:
    tensors = OrderedDict()
    blobs = []
    offset = 0
    for name, t in store.items():
        dtype_name = t.data.dtype.name
        raw = np.ascontiguousarray(t.data).astype(_DTYPE_CODES[dtype_name]).tobytes()
        tensors[name] = {"shape": list(t.shape), "dtype": dtype_name, "offset": offset}
        blobs.append(raw)
        offset += len(raw)
    manifest = json.dumps({"meta": meta, "tensors": tensors}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(manifest)))
        fh.write(manifest)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path: str) -> tuple[ParameterStore, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (mlen,) = struct.unpack("<I", fh.read(4))
        try:
            manifest = json.loads(fh.read(mlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"unreadable manifest: {e}") from e
        blob = fh.read()
    store = ParameterStore()
    for name, spec in manifest["tensors"].items():
        shape = tuple(spec["shape"])
        code = _DTYPE_CODES.get(spec["dtype"])
        if code is None:
            raise CheckpointError(f"unknown dtype {spec['dtype']!r} for {name}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * np.dtype(code).itemsize
        start = spec["offset"]
        if start + nbytes > len(blob):
            raise CheckpointError(f"blob truncated at tensor {name}")
        arr = np.frombuffer(blob[start:start + nbytes], dtype=code).reshape(shape)
        arr = arr.astype(spec["dtype"])
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"checkpoint tensor {name} holds non-finite values")
        store.add(name, Tensor(arr, requires_grad=True))
    return store, manifest["meta"]
