"""Per-token routing read-outs, trace capture, and offline analyses.

A trace row records, for one (sequence, layer, token): the two gate
values, the pre-gate update norms of both paths, their cosine, the deep
contribution share rho_d, and the per-step stop probabilities. Read-outs
always use the pre-gate deltas h_path - x, and all trace arithmetic runs
in float64 regardless of model precision.
"""
from __future__ import annotations

import csv
import json
import os
import string

import numpy as np

from .config import ModelConfig


class TraceError(ValueError):
    """Malformed trace file or analysis request."""


class TagFileError(ValueError):
    """Malformed external tag file."""


# ---------------------------------------------------------------------------
# read-outs


def deep_share(g_d, g_w, norm_dd, norm_dw):
    """rho_d = g_d*|dd| / (g_d*|dd| + g_w*|dw|); degenerate denominators
    split the credit evenly at 0.5."""
    g_d = np.asarray(g_d, dtype=np.float64)
    g_w = np.asarray(g_w, dtype=np.float64)
    norm_dd = np.asarray(norm_dd, dtype=np.float64)
    norm_dw = np.asarray(norm_dw, dtype=np.float64)
    num = g_d * norm_dd
    den = num + g_w * norm_dw
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.5)
    return rho


def path_cosine(delta_d, delta_w):
    """Cosine between the two path updates; 0 when either update is zero."""
    delta_d = np.asarray(delta_d, dtype=np.float64)
    delta_w = np.asarray(delta_w, dtype=np.float64)
    nd = np.linalg.norm(delta_d, axis=-1)
    nw = np.linalg.norm(delta_w, axis=-1)
    dot = (delta_d * delta_w).sum(axis=-1)
    ok = (nd > 0.0) & (nw > 0.0)
    denom = np.where(ok, nd * nw, 1.0)
    return np.where(ok, dot / denom, 0.0)


# ---------------------------------------------------------------------------
# trace capture

TRACE_BASE_COLUMNS = [
    "sequence_id", "layer", "token_index", "token_id",
    "g_d", "g_w", "norm_dd", "norm_dw", "cos_dw", "rho_d",
]


def trace_columns(k: int) -> list[str]:
    return TRACE_BASE_COLUMNS + [f"q_{i}" for i in range(1, k)]


class TraceCollector:
    """Accumulates per-layer routing records during a forward pass."""

    def __init__(self, k: int):
        self.k = k
        self.rows: list[tuple] = []
        self._seq_ids = None
        self._tokens = None

    def begin_batch(self, seq_ids: np.ndarray, token_ids: np.ndarray) -> None:
        self._seq_ids = np.asarray(seq_ids)
        self._tokens = np.asarray(token_ids)

    def record_layer(self, layer, x, h_deep, h_wide, g_d, g_w, stop_probs,
                     token_ids, seq_ids) -> None:
        delta_d = (h_deep - x).astype(np.float64)
        delta_w = (h_wide - x).astype(np.float64)
        norm_dd = np.linalg.norm(delta_d, axis=-1)
        norm_dw = np.linalg.norm(delta_w, axis=-1)
        cos = path_cosine(delta_d, delta_w)
        gd64 = g_d.astype(np.float64)
        gw64 = g_w.astype(np.float64)
        rho = deep_share(gd64, gw64, norm_dd, norm_dw)
        if len(stop_probs) != self.k - 1:
            raise TraceError(f"expected {self.k - 1} stop probs, got {len(stop_probs)}")
        b, t = gd64.shape
        for bi in range(b):
            sid = int(seq_ids[bi])
            for ti in range(t):
                row = (sid, layer, ti, int(token_ids[bi, ti]),
                       float(gd64[bi, ti]), float(gw64[bi, ti]),
                       float(norm_dd[bi, ti]), float(norm_dw[bi, ti]),
                       float(cos[bi, ti]), float(rho[bi, ti]))
                self.rows.append(row + tuple(float(q[bi, ti]) for q in stop_probs))


def write_traces(out_dir: str, collector: TraceCollector, cfg: ModelConfig,
                 corpus_name: str) -> tuple[str, str]:
    """Write traces.csv plus a header.json sidecar; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "traces.csv")
    cols = trace_columns(collector.k)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in collector.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    header = {"config_hash": cfg.hash(), "K": collector.k, "L": cfg.L,
              "corpus": corpus_name}
    header_path = os.path.join(out_dir, "header.json")
    with open(header_path, "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    return csv_path, header_path


def read_traces(path: str) -> dict:
    """Load a trace CSV into columnar float64/int64 arrays.

    The q columns collapse into one [N, K-1] array under key "q".
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise TraceError(f"{path}: empty trace file") from None
        if head[:len(TRACE_BASE_COLUMNS)] != TRACE_BASE_COLUMNS:
            raise TraceError(f"{path}: unexpected columns {head[:4]}...")
        q_cols = head[len(TRACE_BASE_COLUMNS):]
        for i, name in enumerate(q_cols):
            if name != f"q_{i + 1}":
                raise TraceError(f"{path}: bad stop-prob column {name!r}")
        raw = list(reader)
    n = len(raw)
    out = {name: np.empty(n, dtype=np.int64) for name in TRACE_BASE_COLUMNS[:4]}
    for name in TRACE_BASE_COLUMNS[4:]:
        out[name] = np.empty(n, dtype=np.float64)
    out["q"] = np.empty((n, len(q_cols)), dtype=np.float64)
    for i, row in enumerate(raw):
        if len(row) != len(head):
            raise TraceError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(head)}")
        out["sequence_id"][i] = int(row[0])
        out["layer"][i] = int(row[1])
        out["token_index"][i] = int(row[2])
        out["token_id"][i] = int(row[3])
        for j, name in enumerate(TRACE_BASE_COLUMNS[4:], start=4):
            out[name][i] = float(row[j])
        for j in range(len(q_cols)):
            out["q"][i, j] = float(row[len(TRACE_BASE_COLUMNS) + j])
    return out


# ---------------------------------------------------------------------------
# layer bands and profiles


def layer_bands(n_layers: int) -> dict[str, list[int]]:
    """Early/middle/late split: 5/5/6 at sixteen layers, otherwise equal
    thirds with the remainder going to the middle band."""
    if n_layers == 16:
        return {"early": list(range(0, 5)), "middle": list(range(5, 10)),
                "late": list(range(10, 16))}
    n = n_layers // 3
    r = n_layers - 3 * n
    return {
        "early": list(range(0, n)),
        "middle": list(range(n, 2 * n + r)),
        "late": list(range(2 * n + r, n_layers)),
    }


def layer_profile(tr: dict, n_layers: int) -> list[dict]:
    """Mean rho_d and path cosine per layer; one entry per layer 0..L-1."""
    out = []
    for layer in range(n_layers):
        sel = tr["layer"] == layer
        count = int(sel.sum())
        entry = {"layer": layer, "count": count}
        if count:
            entry["mean_rho_d"] = float(tr["rho_d"][sel].mean())
            entry["mean_cos_dw"] = float(tr["cos_dw"][sel].mean())
        else:
            entry["mean_rho_d"] = float("nan")
            entry["mean_cos_dw"] = float("nan")
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# gate-density histograms


def magnitude_edges(tr: dict, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Shared bin edges for the magnitude-weighted histogram, computed once
    over the full trace set so per-layer masses add up across bands."""
    mx = np.log1p(tr["g_w"] * tr["norm_dw"])
    my = np.log1p(tr["g_d"] * tr["norm_dd"])
    hi_x = float(mx.max()) if mx.size else 1.0
    hi_y = float(my.max()) if my.size else 1.0
    return (np.linspace(0.0, hi_x if hi_x > 0 else 1.0, bins + 1),
            np.linspace(0.0, hi_y if hi_y > 0 else 1.0, bins + 1))


def gate_density(tr: dict, layers: list[int], bins: int,
                 mag_edges: tuple[np.ndarray, np.ndarray] | None = None) -> dict:
    """Joint gate histogram plus a magnitude-weighted variant for a layer set.

    Gate axes are (x = g_w, y = g_d) on [0,1]^2. The magnitude variant bins
    (log1p(g_w*|dw|), log1p(g_d*|dd|)) on shared edges.
    """
    sel = np.isin(tr["layer"], layers)
    g_w = tr["g_w"][sel]
    g_d = tr["g_d"][sel]
    gate_edges = np.linspace(0.0, 1.0, bins + 1)
    gate_counts, _, _ = np.histogram2d(g_w, g_d, bins=(gate_edges, gate_edges))
    if mag_edges is None:
        mag_edges = magnitude_edges(tr, bins)
    mx = np.log1p(g_w * tr["norm_dw"][sel])
    my = np.log1p(g_d * tr["norm_dd"][sel])
    mag_counts, _, _ = np.histogram2d(mx, my, bins=mag_edges)
    return {
        "bins": bins,
        "layers": [int(v) for v in layers],
        "total": int(sel.sum()),
        "gate_edges": gate_edges.tolist(),
        "gate_counts": gate_counts.astype(np.int64).tolist(),
        "mag_edges_x": np.asarray(mag_edges[0]).tolist(),
        "mag_edges_y": np.asarray(mag_edges[1]).tolist(),
        "mag_counts": mag_counts.astype(np.int64).tolist(),
    }


def density_report(tr: dict, n_layers: int, bins: int) -> dict:
    """Densities for each band and each layer, on one shared edge set."""
    edges = magnitude_edges(tr, bins)
    bands = layer_bands(n_layers)
    return {
        "bins": bins,
        "n_layers": n_layers,
        "bands": {name: gate_density(tr, layers, bins, edges)
                  for name, layers in bands.items()},
        "layers": {str(layer): gate_density(tr, [layer], bins, edges)
                   for layer in range(n_layers)},
    }


# ---------------------------------------------------------------------------
# token tagging

_ARITH_CHARS = set("0123456789+-*/=<>#")
_ARITH_REQUIRED = set("0123456789+-*/=<>#")


def tag_token(text: str) -> str:
    """Rule tag for one token's decoded text."""
    if text == "":
        return "OTHER"
    stripped = text.strip()
    if stripped == "":
        return "SPACE"
    if all(c in _ARITH_CHARS for c in stripped):
        # <<, >>, and #### only count in full; lone <, >, # are punctuation
        probe = stripped.replace("<<", "").replace(">>", "").replace("####", "")
        if not set(probe) - set("0123456789+-*/="):
            return "ARITH"
    if all(c in string.punctuation for c in stripped):
        return "PUNCT"
    if stripped.isalpha():
        return "WORD"
    return "OTHER"


def decode_token(token_id: int) -> str:
    """Byte-level vocab: one byte per token, latin-1 keeps it invertible."""
    return bytes([token_id]).decode("latin-1")


def load_tag_file(path: str) -> tuple[str, list[tuple]]:
    """Parse an external tag file.

    Two columns (token_index, tag) override tokens directly; three columns
    (char_start, char_end, tag) mark character spans resolved per sequence
    by largest overlap. Returns ("index" | "span", rows).
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.replace("\t", ",").split(",")]
            if width is None:
                width = len(parts)
                if width not in (2, 3):
                    raise TagFileError(f"{path}:{lineno}: expected 2 or 3 columns, got {width}")
            if len(parts) != width:
                raise TagFileError(f"{path}:{lineno}: inconsistent column count")
            try:
                nums = [int(p) for p in parts[:-1]]
            except ValueError as e:
                raise TagFileError(f"{path}:{lineno}: non-integer position: {e}") from None
            tag = parts[-1]
            if not tag:
                raise TagFileError(f"{path}:{lineno}: empty tag")
            if width == 3 and nums[1] <= nums[0]:
                raise TagFileError(f"{path}:{lineno}: empty or inverted span")
            rows.append((*nums, tag))
    if width is None:
        raise TagFileError(f"{path}: no tag rows")
    return ("index" if width == 2 else "span"), rows


def tags_for_sequence(token_texts: list[str], external: tuple | None = None) -> list[str]:
    """Rule tags for one sequence, optionally overridden by an external file.

    Index rows override by position in the sequence. Span rows cover
    character ranges of the decoded sequence text; each overlapping token
    takes the tag of the span it overlaps most (first span wins ties).
    """
    tags = [tag_token(t) for t in token_texts]
    if external is None:
        return tags
    kind, rows = external
    if kind == "index":
        for idx, tag in rows:
            if 0 <= idx < len(tags):
                tags[idx] = tag
        return tags
    offsets = []
    pos = 0
    for t in token_texts:
        offsets.append((pos, pos + len(t)))
        pos += len(t)
    for i, (tok_s, tok_e) in enumerate(offsets):
        best_overlap = 0
        best_tag = None
        for span_s, span_e, tag in rows:
            overlap = min(tok_e, span_e) - max(tok_s, span_s)
            if overlap > best_overlap:
                best_overlap = overlap
                best_tag = tag
        if best_tag is not None:
            tags[i] = best_tag
    return tags


def tag_profile(tr: dict, n_layers: int, external: tuple | None = None) -> list[dict]:
    """Mean rho_d per (tag, layer) with counts, tags resolved per sequence."""
    seq_tags: dict[int, list[str]] = {}
    for sid in np.unique(tr["sequence_id"]):
        sel = (tr["sequence_id"] == sid) & (tr["layer"] == tr["layer"][tr["sequence_id"] == sid][0])
        order = np.argsort(tr["token_index"][sel])
        texts = [decode_token(int(tid)) for tid in tr["token_id"][sel][order]]
        seq_tags[int(sid)] = tags_for_sequence(texts, external)
    acc: dict[tuple[str, int], list[float]] = {}
    for i in range(tr["rho_d"].size):
        sid = int(tr["sequence_id"][i])
        ti = int(tr["token_index"][i])
        tag = seq_tags[sid][ti]
        key = (tag, int(tr["layer"][i]))
        acc.setdefault(key, []).append(tr["rho_d"][i])
    out = []
    for (tag, layer) in sorted(acc):
        vals = acc[(tag, layer)]
        out.append({"tag": tag, "layer": layer,
                    "mean_rho_d": float(np.mean(vals)), "count": len(vals)})
    return out


# ---------------------------------------------------------------------------
# anchor alignment


def find_anchor(token_texts: list[str], anchor: str) -> int | None:
    """First token index where a contiguous run concatenates to the anchor."""
    if not anchor:
        raise TraceError("anchor text must be non-empty")
    for start in range(len(token_texts)):
        built = ""
        j = start
        while len(built) < len(anchor) and j < len(token_texts):
            built += token_texts[j]
            j += 1
        if built == anchor:
            return start
    return None


def _sequence_view(tr: dict) -> dict[int, dict]:
    """Index a trace set by sequence: token texts plus per-(layer, token) rho."""
    view: dict[int, dict] = {}
    for sid in np.unique(tr["sequence_id"]):
        sel = tr["sequence_id"] == sid
        layers = tr["layer"][sel]
        tokens = tr["token_index"][sel]
        first_layer = layers.min()
        base = sel & (tr["layer"] == first_layer)
        order = np.argsort(tr["token_index"][base])
        texts = [decode_token(int(t)) for t in tr["token_id"][base][order]]
        t_len = len(texts)
        n_layers = int(layers.max()) + 1
        rho = np.full((n_layers, t_len), np.nan)
        rho[layers, tokens] = tr["rho_d"][sel]
        view[int(sid)] = {"texts": texts, "rho": rho}
    return view


def anchor_align(tr_a: dict, tr_b: dict, anchor: str, window: int) -> dict:
    """Mean rho_d difference (a - b) per (layer, offset) around the anchor.

    Offsets run -window..window from the anchor's first token. Cells with
    no coverage on either side stay missing (None), never zero. Sequences
    lacking the anchor are excluded and counted.
    """
    sides = []
    n_layers = 0
    for tr in (tr_a, tr_b):
        view = _sequence_view(tr)
        aligned = []
        excluded = 0
        for sid, info in sorted(view.items()):
            pos = find_anchor(info["texts"], anchor)
            if pos is None:
                excluded += 1
                continue
            aligned.append((pos, info["rho"]))
            n_layers = max(n_layers, info["rho"].shape[0])
        sides.append((aligned, excluded))
    offsets = list(range(-window, window + 1))
    means = []
    counts = []
    for aligned, _ in sides:
        mean = np.full((n_layers, len(offsets)), np.nan)
        count = np.zeros((n_layers, len(offsets)), dtype=np.int64)
        sums = np.zeros((n_layers, len(offsets)))
        for pos, rho in aligned:
            t_len = rho.shape[1]
            for oi, off in enumerate(offsets):
                ti = pos + off
                if 0 <= ti < t_len:
                    col = rho[:, ti]
                    ok = ~np.isnan(col)
                    sums[ok, oi] += col[ok]
                    count[ok, oi] += 1
        nz = count > 0
        mean[nz] = sums[nz] / count[nz]
        means.append(mean)
        counts.append(count)
    diff = np.full((n_layers, len(offsets)), np.nan)
    both = (counts[0] > 0) & (counts[1] > 0)
    diff[both] = means[0][both] - means[1][both]

    def grid(arr):
        return [[None if np.isnan(v) else float(v) for v in row] for row in arr]

    return {
        "anchor": anchor,
        "window": window,
        "n_layers": n_layers,
        "offsets": offsets,
        "diff": grid(diff),
        "mean_a": grid(means[0]),
        "mean_b": grid(means[1]),
        "count_a": counts[0].tolist(),
        "count_b": counts[1].tolist(),
        "aligned_a": len(sides[0][0]),
        "aligned_b": len(sides[1][0]),
        "excluded_a": sides[0][1],
        "excluded_b": sides[1][1],
    }
