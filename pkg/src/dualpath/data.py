"""Byte-level corpus handling and a seeded synthetic corpus generator."""
from __future__ import annotations

import random

import numpy as np


class DataError(ValueError):
    """Corpus too small or otherwise unusable."""


def encode_bytes(data: bytes | str) -> np.ndarray:
    """Raw bytes to token ids; vocab is exactly the 256 byte values."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return np.frombuffer(data, dtype=np.uint8).astype(np.int64)


def decode_bytes(ids: np.ndarray) -> str:
    """Inverse of encode for display; latin-1 maps every byte to one char."""
    return bytes(int(i) for i in np.asarray(ids).reshape(-1)).decode("latin-1")


def load_corpus(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw:
        raise DataError(f"{path}: empty corpus")
    return encode_bytes(raw)


def split_holdout(corpus: np.ndarray, holdout_bytes: int) -> tuple[np.ndarray, np.ndarray]:
    """Last holdout_bytes become the evaluation slice; the rest trains."""
    if holdout_bytes <= 0 or holdout_bytes >= corpus.size:
        raise DataError(f"holdout {holdout_bytes} incompatible with corpus of {corpus.size} bytes")
    return corpus[:-holdout_bytes], corpus[-holdout_bytes:]


def batch_offsets(corpus_len: int, batch_size: int, seq_len: int,
                  seed: int, step: int) -> np.ndarray:
    """Window start offsets for one step, pinned by (seed, step) alone.

    Keeping the stream stateless means a resumed run draws the same batch
    at the same step without serializing generator state.
    """
    span = corpus_len - (seq_len + 1)
    if span < 0:
        raise DataError(f"corpus of {corpus_len} tokens too small for seq_len {seq_len}")
    rng = np.random.default_rng([seed, step])
    return rng.integers(0, span + 1, size=batch_size)


def batch_windows(corpus: np.ndarray, offsets: np.ndarray, seq_len: int) -> np.ndarray:
    """Stack [B, seq_len+1] windows (inputs plus next-token targets)."""
    return np.stack([corpus[o:o + seq_len + 1] for o in offsets])


def chunk_sequences(corpus: np.ndarray, seq_len: int) -> np.ndarray:
    """Non-overlapping [N, seq_len+1] evaluation windows; the tail that
    cannot fill a window is dropped."""
    width = seq_len + 1
    n = corpus.size // width
    if n == 0:
        raise DataError(f"corpus of {corpus.size} tokens shorter than one window of {width}")
    return corpus[:n * width].reshape(n, width)


# ---------------------------------------------------------------------------
# synthetic corpus

_NAMES = ["Ada", "Ben", "Cora", "Dev", "Elif", "Finn", "Gwen", "Hugo",
          "Iris", "Jon", "Kira", "Liam", "Mara", "Nils", "Odin", "Pia"]
_ITEMS = ["apples", "books", "coins", "pens", "shells", "stones", "cards",
          "stamps", "keys", "maps"]
_VERBS = ["finds", "buys", "wins", "gathers", "picks"]
_CAPITALS = [("France", "Paris"), ("Japan", "Tokyo"), ("Italy", "Rome"),
             ("Spain", "Madrid"), ("Norway", "Oslo"), ("Egypt", "Cairo"),
             ("Kenya", "Nairobi"), ("Chile", "Santiago"), ("India", "Delhi"),
             ("Canada", "Ottawa")]
_FILLER = [
    "The river ran quietly past the old mill.",
    "A small lamp flickered in the window at dusk.",
    "Long roads cross the plain before the hills begin.",
    "Rain fell on the roof for most of the night.",
    "The library stayed open later during the winter.",
    "Boats returned to the harbor before the storm.",
    "Every morning the baker stacked warm loaves by the door.",
    "The clock tower chimed over the empty square.",
]


def _arith_block(rnd: random.Random) -> str:
    name = rnd.choice(_NAMES)
    item = rnd.choice(_ITEMS)
    verb = rnd.choice(_VERBS)
    a = rnd.randint(2, 99)
    b = rnd.randint(2, 99)
    if rnd.random() < 0.5:
        total = a + b
        work = f"{a} + {b} = <<{a}+{b}={total}>>{total}"
    else:
        a = max(a, b)
        b = rnd.randint(1, a - 1)
        total = a - b
        work = f"{a} - {b} = <<{a}-{b}={total}>>{total}"
    return (f"Question: {name} has {a} {item} and {verb} {b} more. "
            f"How many {item} does {name} have?\n"
            f"Answer: {work}\n#### {total}\n")


def _trivia_block(rnd: random.Random) -> str:
    country, capital = rnd.choice(_CAPITALS)
    return (f"Question: What is the capital of {country}?\n"
            f"Answer: {capital}\n")


def synthetic_corpus(seed: int, n_bytes: int) -> bytes:
    """Deterministic mixed text: filler prose, arithmetic word problems
    with worked answers, and short trivia pairs."""
    rnd = random.Random(seed)
    parts = []
    size = 0
    while size < n_bytes:
        roll = rnd.random()
        if roll < 0.45:
            text = _arith_block(rnd)
        elif roll < 0.65:
            text = _trivia_block(rnd)
        else:
            text = rnd.choice(_FILLER) + "\n"
        text += "\n"
        parts.append(text)
        size += len(text)
    return "".join(parts).encode("utf-8")[:n_bytes]
