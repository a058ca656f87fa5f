"""Central-difference validation of tape gradients."""
from __future__ import annotations

import numpy as np

from .tensor import NonFiniteError, Tape, TensorError, set_finite_checks


class GradCheckError(TensorError):
    """The scalar function returned a non-finite value during checking."""


def grad_check(f, store, step: float = 1e-4,
               max_coords_per_param: int | None = None,
               sample_seed: int = 0) -> dict:
    """Compare tape gradients of ``f(store)`` against central differences.

    f must be a pure scalar function of the parameters in ``store``. All
    parameters must be float64; relative error for one coordinate is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). Returns a dict
    with ``max_rel_err``, the offending ``worst_param``, and per-parameter
    errors under ``per_param``.

    Every parameter is probed. By default every coordinate is, too;
    ``max_coords_per_param`` caps the probes per parameter at a seeded
    random sample so large models finish in bounded time (parameters at or
    under the cap are still checked exhaustively).
    """
    params = [(name, t) for name, t in store.items() if t.requires_grad]
    for name, t in params:
        if t.dtype != np.float64:
            raise GradCheckError(f"grad_check requires float64 parameters, {name} is {t.dtype}")
        t.zero_grad()

    with Tape() as tape:
        loss = f(store)
    if not np.isfinite(loss.data).all():
        raise GradCheckError("non-finite loss in analytic pass")
    tape.backward(loss)
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros(t.shape, dtype=np.float64))
        for name, t in params
    }

    def eval_f() -> float:
        out = f(store)
        v = float(out.data.reshape(()))
        if not np.isfinite(v):
            raise GradCheckError("non-finite loss during finite differencing")
        return v

    per_param: dict[str, float] = {}
    max_rel = 0.0
    worst = None
    # eval_f validates each probe's scalar, so the per-op scans that guard
    # ordinary construction only slow the differencing loop down
    checks_were = set_finite_checks(False)
    rng = np.random.default_rng(sample_seed)
    try:
        for name, t in params:
            flat = t.data.reshape(-1)
            ana = analytic[name].reshape(-1)
            p_max = 0.0
            if max_coords_per_param is not None and flat.size > max_coords_per_param:
                coords = rng.choice(flat.size, size=max_coords_per_param, replace=False)
            else:
                coords = range(flat.size)
            for i in coords:
                orig = flat[i]
                flat[i] = orig + step
                f_plus = eval_f()
                flat[i] = orig - step
                f_minus = eval_f()
                flat[i] = orig
                numeric = (f_plus - f_minus) / (2.0 * step)
                rel = abs(ana[i] - numeric) / max(abs(ana[i]), abs(numeric), 1e-8)
                if rel > p_max:
                    p_max = rel
            per_param[name] = p_max
            if p_max >= max_rel:
                max_rel = p_max
                worst = name
    finally:
        set_finite_checks(checks_were)
    return {"max_rel_err": max_rel, "worst_param": worst, "per_param": per_param}
