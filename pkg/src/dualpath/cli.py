"""Single binary exposing the training, solving, tracing, and analysis
surface. Every subcommand reads plain files and emits JSON or CSV so the
outputs can feed external tooling directly."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .ablation import ablation_report, parse_ablation
from .config import ConfigError, ModelConfig, TrainConfig, load_config_file
from .data import chunk_sequences, encode_bytes, load_corpus, synthetic_corpus
from .flops import BudgetError, param_count, solve_widths
from .model import model_forward
from .routing import (
    TraceCollector,
    anchor_align,
    density_report,
    layer_profile,
    load_tag_file,
    read_traces,
    tag_profile,
    write_traces,
)
from .train import evaluate_bpb, load_model_checkpoint, train


def _emit(payload: dict, emit: str, stream=None) -> None:
    stream = stream or sys.stdout
    if emit == "json":
        json.dump(payload, stream, indent=2)
        stream.write("\n")
    elif emit == "csv":
        writer = csv.writer(stream)
        keys = list(payload.keys())
        writer.writerow(keys)
        writer.writerow([payload[k] for k in keys])
    else:
        width = max(len(k) for k in payload)
        for k, v in payload.items():
            stream.write(f"{k:<{width}}  {v}\n")


def _flop_count(raw: str) -> int:
    """Budgets read naturally in scientific notation (80e6) or plain int."""
    try:
        return int(raw)
    except ValueError:
        return int(float(raw))


def _budget_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--budget", type=_flop_count, required=True,
                     help="per-layer FLOP budget, e.g. 80000000 or 80e6")
    sub.add_argument("--variant", required=True,
                     choices=["pureloop", "purewide", "dual"])
    sub.add_argument("--k", type=int, default=1, help="loop count")
    sub.add_argument("--alpha", type=float, default=None,
                     help="deep-path budget fraction (dual only)")
    sub.add_argument("--d", type=int, default=768, help="model width")
    sub.add_argument("--nrep", type=int, default=1,
                     help="query heads per key/value head")


def _cmd_solve(args) -> int:
    sol = solve_widths(args.budget, args.variant, args.k, args.alpha,
                       d=args.d, n_rep=args.nrep)
    _emit(sol, args.emit)
    return 0


def _cmd_params(args) -> int:
    sol = solve_widths(args.budget, args.variant, args.k, args.alpha,
                       d=args.d, n_rep=args.nrep)
    counts = param_count(
        args.variant, args.d, args.layers, args.vocab, args.k,
        d_ffn_deep=sol.get("d_ffn", 0), d_ffn_wide=sol.get("d_ffn_wide", 0),
        h_q=args.heads, h_kv=args.heads // args.nrep,
        tie_embeddings=args.tie)
    payload = dict(sol)
    payload.update({"L": args.layers, "vocab": args.vocab, "tie": args.tie})
    payload.update(counts)
    _emit(payload, args.emit)
    return 0


def _cmd_train(args) -> int:
    model_cfg, train_cfg, _ = load_config_file(args.config)
    corpus = load_corpus(args.corpus)
    out = train(model_cfg, train_cfg, corpus, args.out,
                resume=args.resume, quiet=args.quiet)
    print(json.dumps({"final_checkpoint": out["final_checkpoint"],
                      "loss_curve": out["loss_curve"],
                      "holdout": out["holdout"]}, indent=2))
    return 0


def _cmd_eval(args) -> int:
    store, model_cfg, meta = load_model_checkpoint(args.checkpoint)
    corpus = load_corpus(args.corpus)
    seq_len = args.seq_len or min(model_cfg.t_max, 128)
    metrics = evaluate_bpb(store, model_cfg, corpus, seq_len, args.batch_size)
    metrics["checkpoint_step"] = meta.get("step")
    print(json.dumps(metrics, indent=2))
    return 0


def _cmd_trace(args) -> int:
    store, model_cfg, _ = load_model_checkpoint(args.checkpoint)
    corpus = load_corpus(args.input)
    seq_len = args.seq_len or min(model_cfg.t_max, 128)
    windows = chunk_sequences(corpus, seq_len)[:, :-1]
    if args.limit is not None:
        windows = windows[:args.limit]
    collector = TraceCollector(model_cfg.k)
    for lo in range(0, windows.shape[0], args.batch_size):
        chunk = windows[lo:lo + args.batch_size]
        seq_ids = np.arange(lo, lo + chunk.shape[0])
        collector.begin_batch(seq_ids, chunk)
        model_forward(chunk, store, model_cfg, seq_ids=seq_ids,
                      collector=collector)
    corpus_name = os.path.basename(args.input)
    csv_path, header_path = write_traces(args.out_dir, collector, model_cfg,
                                         corpus_name)
    print(json.dumps({"traces": csv_path, "header": header_path,
                      "rows": len(collector.rows),
                      "sequences": int(windows.shape[0])}, indent=2))
    return 0


def _read_trace_header(traces_path: str) -> dict:
    header_path = os.path.join(os.path.dirname(traces_path) or ".", "header.json")
    with open(header_path) as fh:
        return json.load(fh)


def _cmd_analyze(args) -> int:
    tr = read_traces(args.traces)
    header = _read_trace_header(args.traces)
    n_layers = header["L"]
    if args.report == "layers":
        payload = {"report": "layers", "layers": layer_profile(tr, n_layers)}
    elif args.report == "density":
        payload = {"report": "density"}
        payload.update(density_report(tr, n_layers, args.bins))
    elif args.report == "tags":
        external = load_tag_file(args.tags_file) if args.tags_file else None
        payload = {"report": "tags", "tags": tag_profile(tr, n_layers, external)}
    else:
        if not args.anchor_text:
            raise SystemExit("analyze --report anchor requires --anchor-text")
        if args.traces_b:
            tr_b = read_traces(args.traces_b)
        else:
            tr_b = tr
        payload = {"report": "anchor"}
        payload.update(anchor_align(tr, tr_b, args.anchor_text, args.window))
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(json.dumps({"written": args.out}, indent=2))
    else:
        print(text)
    return 0


def _cmd_ablate(args) -> int:
    store, model_cfg, _ = load_model_checkpoint(args.checkpoint)
    corpus = load_corpus(args.corpus)
    seq_len = args.seq_len or min(model_cfg.t_max, 128)
    ab = parse_ablation(args.spec)
    report = ablation_report(store, model_cfg, corpus, ab, seq_len,
                             batch_size=args.batch_size, limit=args.limit)
    _emit(report, args.emit)
    return 0


def _cmd_make_corpus(args) -> int:
    raw = synthetic_corpus(args.seed, args.bytes)
    with open(args.out, "wb") as fh:
        fh.write(raw)
    print(json.dumps({"out": args.out, "bytes": len(raw),
                      "seed": args.seed}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualpath",
        description="Dual-path transformer training and analysis toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("solve", help="solve FFN widths for a FLOP budget")
    _budget_flags(sub)
    sub.add_argument("--emit", choices=["json", "csv", "table"], default="json")
    sub.set_defaults(func=_cmd_solve)

    sub = subs.add_parser("params", help="parameter counts for a solved config")
    _budget_flags(sub)
    sub.add_argument("--tie", action="store_true",
                     help="tie the embedding and output head")
    sub.add_argument("--layers", type=int, default=16)
    sub.add_argument("--vocab", type=int, default=50304)
    sub.add_argument("--heads", type=int, default=12)
    sub.add_argument("--emit", choices=["json", "csv", "table"], default="json")
    sub.set_defaults(func=_cmd_params)

    sub = subs.add_parser("train", help="train from a config file")
    sub.add_argument("--config", required=True)
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--resume", default=None,
                     help="train checkpoint to continue from")
    sub.add_argument("--quiet", action="store_true")
    sub.set_defaults(func=_cmd_train)

    sub = subs.add_parser("eval", help="bits-per-byte on a corpus")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--seq-len", type=int, default=None)
    sub.add_argument("--batch-size", type=int, default=8)
    sub.set_defaults(func=_cmd_eval)

    sub = subs.add_parser("trace", help="capture per-token routing traces")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--input", required=True, help="corpus file to trace")
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--seq-len", type=int, default=None)
    sub.add_argument("--batch-size", type=int, default=8)
    sub.add_argument("--limit", type=int, default=None,
                     help="trace at most this many sequences")
    sub.set_defaults(func=_cmd_trace)

    sub = subs.add_parser("analyze", help="offline reports over a trace set")
    sub.add_argument("--traces", required=True, help="traces.csv path")
    sub.add_argument("--report", required=True,
                     choices=["layers", "density", "tags", "anchor"])
    sub.add_argument("--anchor-text", default=None)
    sub.add_argument("--window", type=int, default=5)
    sub.add_argument("--tags-file", default=None)
    sub.add_argument("--traces-b", default=None,
                     help="second trace set for anchor differencing")
    sub.add_argument("--bins", type=int, default=20)
    sub.add_argument("--out", default=None, help="write JSON here instead of stdout")
    sub.set_defaults(func=_cmd_analyze)

    sub = subs.add_parser("ablate", help="evaluate an inference-time intervention")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--spec", required=True,
                     help='e.g. "force-loops:6", "gates:1,0", "shuffle:seed=7"')
    sub.add_argument("--emit", choices=["json", "csv"], default="json")
    sub.add_argument("--seq-len", type=int, default=None)
    sub.add_argument("--batch-size", type=int, default=8)
    sub.add_argument("--limit", type=int, default=None)
    sub.set_defaults(func=_cmd_ablate)

    sub = subs.add_parser("make-corpus", help="write a synthetic byte corpus")
    sub.add_argument("--out", required=True)
    sub.add_argument("--bytes", type=int, default=1_000_000)
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=_cmd_make_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BudgetError, ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
