"""Regenerate frontend/fixtures from real toolkit outputs.

Trains the smoke config briefly, traces two checkpoints over a corpus that
contains a repeating arithmetic anchor, runs the three analysis reports,
and assembles the model-summary table from parameter counts plus measured
bits per byte. Writes into frontend/fixtures/. Takes about two minutes on
one core.
"""
from __future__ import annotations

import dataclasses
import json
import os
import subprocess
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(REPO, "src"))

from dualpath.config import load_config_file  # noqa: E402
from dualpath.data import load_corpus, synthetic_corpus  # noqa: E402
from dualpath.flops import param_count  # noqa: E402
from dualpath.train import evaluate_bpb, load_model_checkpoint, train  # noqa: E402


def anchor_corpus(n_bytes: int) -> bytes:
    """Synthetic text with the anchor '12+7=19' recurring mid-line."""
    base = synthetic_corpus(5, n_bytes)
    chunk = bytearray()
    i = 0
    while len(chunk) < n_bytes:
        chunk += base[i:i + 53]
        chunk += b" 12+7=19 "
        i += 53
    return bytes(chunk[:n_bytes])


def run_cli(*args: str) -> None:
    cmd = [sys.executable, "-m", "dualpath", *args]
    env = dict(os.environ, PYTHONPATH=os.path.join(REPO, "src"))
    subprocess.run(cmd, check=True, cwd=REPO, env=env,
                   stdout=subprocess.DEVNULL)


def main() -> None:
    fixtures = os.path.join(REPO, "frontend", "fixtures")
    os.makedirs(fixtures, exist_ok=True)
    work = tempfile.mkdtemp(prefix="figure-fixtures-")

    train_corpus_path = os.path.join(work, "train.bin")
    with open(train_corpus_path, "wb") as fh:
        fh.write(synthetic_corpus(3, 200_000))
    anchor_path = os.path.join(work, "anchor.bin")
    with open(anchor_path, "wb") as fh:
        fh.write(anchor_corpus(40_000))

    model_cfg, train_cfg, _ = load_config_file(
        os.path.join(REPO, "configs", "desk-smoke.ini"))
    out_dir = os.path.join(work, "run")
    summary = train(model_cfg, train_cfg, load_corpus(train_corpus_path),
                    out_dir, quiet=True)
    final_ckpt = summary["final_checkpoint"]
    early_ckpt = os.path.join(out_dir, "step000030.ckpt")

    tr_a = os.path.join(work, "tr_a")
    tr_b = os.path.join(work, "tr_b")
    for ckpt, dest in ((final_ckpt, tr_a), (early_ckpt, tr_b)):
        run_cli("trace", "--checkpoint", ckpt, "--input", anchor_path,
                "--out-dir", dest, "--limit", "48")

    traces_a = os.path.join(tr_a, "traces.csv")
    run_cli("analyze", "--traces", traces_a, "--report", "layers",
            "--out", os.path.join(fixtures, "layers.json"))
    run_cli("analyze", "--traces", traces_a, "--report", "density",
            "--bins", "8", "--out", os.path.join(fixtures, "density.json"))
    run_cli("analyze", "--traces", traces_a, "--report", "anchor",
            "--anchor-text", "12+7=19", "--window", "4",
            "--traces-b", os.path.join(tr_b, "traces.csv"),
            "--out", os.path.join(fixtures, "anchor.json"))

    # summary table: real parameter counts and measured bits per byte for
    # the three block variants at smoke scale
    rows = ["label,family,params,bpb"]
    eval_corpus = load_corpus(train_corpus_path)
    variants = [
        ("dual-k3", model_cfg),
        ("loop-k3", dataclasses.replace(model_cfg, variant="pureloop",
                                        d_ffn_wide=None)),
        ("wide", dataclasses.replace(model_cfg, variant="purewide", k=1,
                                     d_ffn_deep=None)),
    ]
    for label, cfg in variants:
        run_dir = os.path.join(work, f"run-{label}")
        out = train(cfg, train_cfg, eval_corpus, run_dir, quiet=True)
        store, loaded_cfg, _ = load_model_checkpoint(out["final_checkpoint"])
        counts = param_count(
            loaded_cfg.variant, loaded_cfg.d, loaded_cfg.L, loaded_cfg.vocab,
            loaded_cfg.k, d_ffn_deep=loaded_cfg.d_ffn_deep,
            d_ffn_wide=loaded_cfg.d_ffn_wide, h_q=loaded_cfg.h_q,
            h_kv=loaded_cfg.h_kv)
        metrics = evaluate_bpb(store, loaded_cfg, eval_corpus,
                               seq_len=loaded_cfg.t_max)
        rows.append(f"{label},{loaded_cfg.variant},{counts['total']},"
                    f"{metrics['bpb']:.6f}")
    with open(os.path.join(fixtures, "summary.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")

    sizes = {name: os.path.getsize(os.path.join(fixtures, name))
             for name in sorted(os.listdir(fixtures))}
    print(json.dumps({"fixtures": sizes, "work": work}, indent=2))


if __name__ == "__main__":
    main()
