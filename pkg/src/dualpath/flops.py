"""Per-layer FLOP accounting, iso-FLOP width solving, and parameter counts.

All formulas count multiply-accumulates as 2 FLOPs per parameter touched,
per token. The gated SwiGLU hidden size actually instantiated for a
nominal width d_ffn is h_eff(d_ffn) = 64 * ceil(floor(2*d_ffn/3)/64), and
FLOP accounting always uses h_eff, never the nominal width.
"""
from __future__ import annotations

import math

SOLVER_VARIANTS = ("dual", "pureloop", "purewide")


class BudgetError(ValueError):
    """Invalid width-solver request."""


def h_eff(d_ffn: int) -> int:
    """Instantiated SwiGLU hidden size for a nominal width."""
    if d_ffn <= 0:
        raise BudgetError(f"d_ffn must be positive, got {d_ffn}")
    return 64 * math.ceil((2 * d_ffn // 3) / 64)


def flops_attn(d: int, n_rep: int = 1) -> int:
    """Attention projections: q and o at d*d each, k and v at d*d/n_rep each."""
    if d % 1 or d <= 0 or n_rep <= 0:
        raise BudgetError("d and n_rep must be positive")
    kv = (4 * d * d) // n_rep
    if (4 * d * d) % n_rep:
        raise BudgetError(f"4*d^2 not divisible by n_rep={n_rep}")
    return 4 * d * d + kv


def flops_ffn(d: int, d_ffn: int) -> int:
    """SwiGLU: three projections of size d x h_eff."""
    return 6 * d * h_eff(d_ffn)


def flops_gate(d: int) -> int:
    """Per-token gate projection d -> 2, forward cost only."""
    return 4 * d


def layer_budget(variant: str, k: int, d: int, n_rep: int = 1,
                 d_ffn_deep: int | None = None, d_ffn_wide: int | None = None) -> int:
    """Realized per-token FLOPs for one layer of the given variant."""
    if variant not in SOLVER_VARIANTS:
        raise BudgetError(f"unknown variant {variant!r}")
    attn = flops_attn(d, n_rep)
    if variant == "purewide":
        return attn + flops_ffn(d, d_ffn_wide)
    if variant == "pureloop":
        return k * (attn + flops_ffn(d, d_ffn_deep))
    return (k * (attn + flops_ffn(d, d_ffn_deep))
            + attn + flops_ffn(d, d_ffn_wide)
            + flops_gate(d))


def _width_floor(target: float, d: int) -> tuple[int, int, bool]:
    """Round the hidden target down to hardware-friendly sizes.

    Returns (d_ffn, h64, clamped). h64 is the largest 64-multiple at or
    below target/(6d); the nominal width is the largest 64-multiple whose
    h_eff does not exceed h64, i.e. floor(1.5*h64) to the grid. Targets too
    small for one 64-wide slab clamp to d_ffn = 64.
    """
    h_raw = target / (6 * d)
    h64 = 64 * math.floor(h_raw / 64)
    if h64 <= 0:
        return 64, h_eff(64), True
    d_ffn = 64 * math.floor((3 * h64 // 2) / 64)
    if d_ffn <= 0:
        return 64, h_eff(64), True
    return d_ffn, h64, False


def _width_ceil(target: float, d: int) -> tuple[int, int, bool]:
    """Round the hidden target up; used where the budget is a floor, not a cap."""
    h_raw = target / (6 * d)
    h64 = 64 * math.ceil(h_raw / 64)
    if h64 <= 0:
        h64 = 64
    d_ffn = 64 * math.ceil(3 * h64 / 2 / 64)
    return d_ffn, h64, False


def solve_widths(budget: float, variant: str, k: int = 1, alpha: float | None = None,
                 d: int = 768, n_rep: int = 1) -> dict:
    """Pick FFN widths so one layer's FLOPs meet a per-layer budget.

    PureWide rounds up (it is the reference ceiling); every other width
    rounds down so realized cost stays at or under budget. Dual splits the
    budget after reserving the gate cost: a fraction alpha to the looped
    path (spread over k iterations), the rest to the single-pass path.
    Returns a dict with the chosen widths, their h_eff, realized per-layer
    FLOPs, and the absolute/relative mismatch against the budget.
    """
    if variant not in SOLVER_VARIANTS:
        raise BudgetError(f"unknown variant {variant!r}")
    if budget <= 0:
        raise BudgetError("budget must be positive")
    if k < 1:
        raise BudgetError("k must be >= 1")
    attn = flops_attn(d, n_rep)
    out: dict = {"variant": variant, "k": k, "budget": float(budget), "d": d, "n_rep": n_rep}
    clamped = False

    if variant == "purewide":
        if k != 1:
            raise BudgetError("purewide has no loop; k must be 1")
        target = budget - attn
        if target <= 0:
            raise BudgetError(f"budget {budget} cannot cover attention {attn}")
        d_ffn_wide, h_wide, _ = _width_ceil(target, d)
        out.update(d_ffn_wide=d_ffn_wide, h_eff_wide=h_eff(d_ffn_wide))
        realized = layer_budget(variant, 1, d, n_rep, d_ffn_wide=d_ffn_wide)
    elif variant == "pureloop":
        target = budget / k - attn
        if target <= 0:
            raise BudgetError(f"budget {budget} cannot cover {k} attention passes")
        d_ffn, h64, clamped = _width_floor(target, d)
        out.update(d_ffn=d_ffn, h_eff=h_eff(d_ffn))
        realized = layer_budget(variant, k, d, n_rep, d_ffn_deep=d_ffn)
    else:
        if alpha is None or not (0 < alpha < 1):
            raise BudgetError("dual needs 0 < alpha < 1")
        out["alpha"] = alpha
        pool = budget - flops_gate(d)
        deep_target = alpha * pool / k - attn
        wide_target = (1 - alpha) * pool - attn
        if deep_target <= 0 or wide_target <= 0:
            raise BudgetError("budget cannot cover attention in both paths")
        d_ffn, _, c1 = _width_floor(deep_target, d)
        d_ffn_wide, _, c2 = _width_floor(wide_target, d)
        clamped = c1 or c2
        out.update(d_ffn=d_ffn, h_eff=h_eff(d_ffn),
                   d_ffn_wide=d_ffn_wide, h_eff_wide=h_eff(d_ffn_wide))
        realized = layer_budget(variant, k, d, n_rep,
                                d_ffn_deep=d_ffn, d_ffn_wide=d_ffn_wide)

    mismatch = realized - budget
    out.update(flops_per_layer=realized,
               mismatch_abs=float(mismatch),
               mismatch_rel=float(mismatch / budget),
               clamped=clamped)
    return out


def param_count(variant: str, d: int, L: int, vocab: int, k: int = 1,
                d_ffn_deep: int | None = None, d_ffn_wide: int | None = None,
                h_q: int = 12, h_kv: int = 12, tie_embeddings: bool = False) -> dict:
    """Exact parameter breakdown for a full model.

    ``core`` counts embeddings, head, attention, and FFN projections;
    ``total`` adds norm gains, path gain logits, router, and gate weights.
    The looped path's weights are counted once regardless of k.
    """
    if variant not in SOLVER_VARIANTS:
        raise BudgetError(f"unknown variant {variant!r}")
    d_head = d // h_q
    n_rep = h_q // h_kv
    attn_per = 2 * d * d + 2 * d * (d // n_rep)

    has_deep = variant in ("dual", "pureloop")
    has_wide = variant in ("dual", "purewide")

    embedding = vocab * d
    head = 0 if tie_embeddings else vocab * d
    attention = 0
    ffn = 0
    norms = d  # final norm
    gains = 0
    router = 0
    gate = 0
    for _ in range(L):
        if has_deep:
            attention += attn_per
            ffn += 3 * d * h_eff(d_ffn_deep)
            norms += 2 * d + 2 * d_head
            gains += k
            router += (d + 1) + 1
        if has_wide:
            attention += attn_per
            ffn += 3 * d * h_eff(d_ffn_wide)
            norms += 2 * d + 2 * d_head
            gains += 1
        if variant == "dual":
            gate += 2 * d + 2
    core = embedding + head + attention + ffn
    total = core + norms + gains + router + gate
    return {
        "embedding": embedding, "head": head, "attention": attention, "ffn": ffn,
        "norms": norms, "gains": gains, "router": router, "gate": gate,
        "core": core, "total": total,
    }
