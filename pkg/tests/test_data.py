"""Byte tokenizer, stateless batching, and the synthetic corpus."""
import re

import numpy as np
import pytest

from dualpath.data import (
    DataError,
    batch_offsets,
    batch_windows,
    chunk_sequences,
    decode_bytes,
    encode_bytes,
    load_corpus,
    split_holdout,
    synthetic_corpus,
)


def test_encode_decode_all_bytes():
    raw = bytes(range(256))
    ids = encode_bytes(raw)
    assert ids.dtype == np.int64
    assert (ids == np.arange(256)).all()
    assert decode_bytes(ids).encode("latin-1") == raw


def test_encode_accepts_text():
    assert (encode_bytes("AB") == np.array([65, 66])).all()


def test_load_corpus_roundtrip(tmp_path):
    p = tmp_path / "c.txt"
    p.write_bytes(b"hello corpus")
    ids = load_corpus(str(p))
    assert decode_bytes(ids) == "hello corpus"
    empty = tmp_path / "e.txt"
    empty.write_bytes(b"")
    with pytest.raises(DataError):
        load_corpus(str(empty))


def test_split_holdout_takes_the_tail():
    corpus = np.arange(100, dtype=np.int64) % 256
    train, tail = split_holdout(corpus, 30)
    assert train.size == 70 and tail.size == 30
    assert (np.concatenate([train, tail]) == corpus).all()
    for bad in (0, -1, 100, 200):
        with pytest.raises(DataError):
            split_holdout(corpus, bad)


def test_batch_offsets_pinned_by_seed_and_step():
    for seed in range(5):
        for step in range(5):
            a = batch_offsets(1000, 4, 32, seed, step)
            b = batch_offsets(1000, 4, 32, seed, step)
            assert (a == b).all()
            assert a.shape == (4,)
            assert (a >= 0).all() and (a <= 1000 - 33).all()


def test_batch_offsets_vary_with_step():
    draws = [tuple(batch_offsets(100_000, 8, 32, 0, step)) for step in range(20)]
    assert len(set(draws)) == 20


def test_batch_offsets_vary_with_seed():
    a = batch_offsets(100_000, 8, 32, 0, 0)
    b = batch_offsets(100_000, 8, 32, 1, 0)
    assert not (a == b).all()


def test_batch_offsets_rejects_short_corpus():
    with pytest.raises(DataError):
        batch_offsets(32, 2, 32, 0, 0)
    # a corpus of exactly seq_len+1 tokens holds one window at offset 0
    offs = batch_offsets(33, 2, 32, 0, 0)
    assert (offs == 0).all()


def test_batch_windows_match_corpus_slices():
    rng = np.random.default_rng(0)
    corpus = rng.integers(0, 256, size=500)
    offsets = np.array([0, 17, 467])
    w = batch_windows(corpus, offsets, 32)
    assert w.shape == (3, 33)
    for row, off in zip(w, offsets):
        assert (row == corpus[off:off + 33]).all()


def test_chunk_sequences_non_overlapping():
    corpus = np.arange(100, dtype=np.int64) % 256
    w = chunk_sequences(corpus, 9)
    assert w.shape == (10, 10)
    assert (w.reshape(-1) == corpus).all()
    w2 = chunk_sequences(corpus, 32)
    assert w2.shape == (3, 33)
    assert (w2.reshape(-1) == corpus[:99]).all()
    with pytest.raises(DataError):
        chunk_sequences(corpus[:5], 32)


def test_synthetic_corpus_deterministic_and_sized():
    a = synthetic_corpus(7, 5000)
    b = synthetic_corpus(7, 5000)
    assert a == b
    assert len(a) == 5000
    assert synthetic_corpus(8, 5000) != a


def test_synthetic_corpus_is_ascii():
    raw = synthetic_corpus(0, 20_000)
    assert max(raw) < 128


def test_synthetic_corpus_contains_expected_shapes():
    text = synthetic_corpus(0, 50_000).decode("ascii")
    assert "Question:" in text
    assert "Answer:" in text
    assert "####" in text
    assert "<<" in text and ">>" in text


def test_synthetic_corpus_arithmetic_is_correct():
    text = synthetic_corpus(3, 100_000).decode("ascii")
    facts = re.findall(r"<<(\d+)\+(\d+)=(\d+)>>", text)
    assert len(facts) > 50
    for a, b, c in facts:
        assert int(a) + int(b) == int(c)
    answers = re.findall(r"<<\d+\+\d+=(\d+)>>(\d+)\n#### (\d+)\n", text)
    assert len(answers) > 50
    for inner, echoed, final in answers:
        assert inner == echoed == final
