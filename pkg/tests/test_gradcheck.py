"""grad_check behavior: agreement on healthy graphs, detection of planted bugs."""
import numpy as np
import pytest

import dualpath.tensor as T
from dualpath.gradcheck import GradCheckError, grad_check
from dualpath.params import ParameterStore


def toy_store(seed=0):
    rng = np.random.default_rng(seed)
    store = ParameterStore()
    store.add("w", T.Tensor(rng.standard_normal((4, 3)), requires_grad=True))
    store.add("b", T.Tensor(rng.standard_normal(3), requires_grad=True))
    return store


def toy_loss(store):
    x = T.Tensor(np.linspace(-1.0, 1.0, 8).reshape(2, 4))
    h = T.add(T.matmul(x, store["w"]), store["b"])
    return T.tmean(T.mul(T.sigmoid(h), h))


def test_grad_check_passes_on_clean_graph():
    report = grad_check(toy_loss, toy_store(), step=1e-5)
    assert report["max_rel_err"] < 1e-6
    assert set(report["per_param"]) == {"w", "b"}


def test_grad_check_catches_a_planted_error():
    def broken(store):
        loss = toy_loss(store)
        # detach one parameter's influence from the tape but not the value
        extra = float(store["b"].data.sum())
        return T.add(loss, T.Tensor(np.asarray(extra * 0.1)))

    report = grad_check(broken, toy_store(), step=1e-5)
    assert report["max_rel_err"] > 1e-3
    assert report["worst_param"] == "b"


def test_grad_check_requires_float64():
    store = ParameterStore()
    store.add("w", T.Tensor(np.ones((2, 2), dtype=np.float32), requires_grad=True))
    with pytest.raises(GradCheckError):
        grad_check(lambda s: T.tsum(s["w"]), store)


def test_grad_check_rejects_non_finite_f():
    store = toy_store()

    def exploding(s):
        return T.log(T.tsum(T.mul(s["w"], s["w"])) - T.tsum(T.mul(s["w"], s["w"])) + T.Tensor(np.asarray(0.0)))

    with pytest.raises((GradCheckError, T.DomainError)):
        grad_check(exploding, store, step=1e-5)


def test_grad_check_coordinate_sampling():
    rng = np.random.default_rng(3)
    store = ParameterStore()
    store.add("big", T.Tensor(rng.standard_normal((20, 30)), requires_grad=True))
    store.add("small", T.Tensor(rng.standard_normal(5), requires_grad=True))

    def loss(s):
        return T.tmean(T.mul(T.sigmoid(s["big"]), s["big"])) + T.tsum(T.mul(s["small"], s["small"]))

    # capped runs still probe every parameter, agree on healthy graphs,
    # and repeat bit-identically under the same sample seed
    a = grad_check(loss, store, step=1e-5, max_coords_per_param=64)
    b = grad_check(loss, store, step=1e-5, max_coords_per_param=64)
    assert set(a["per_param"]) == {"big", "small"}
    assert a["max_rel_err"] < 1e-6
    assert a["per_param"] == b["per_param"]

    def broken(s):
        extra = float(s["big"].data.sum())
        return T.add(loss(s), T.Tensor(np.asarray(extra * 0.1)))

    # a systematic gradient bug on a large tensor shows at every coordinate,
    # so any sample exposes it
    report = grad_check(broken, store, step=1e-5, max_coords_per_param=64)
    assert report["worst_param"] == "big"
    assert report["max_rel_err"] > 1e-3


def test_grad_check_restores_parameters():
    store = toy_store()
    before = {n: t.data.copy() for n, t in store.items()}
    grad_check(toy_loss, store, step=1e-5)
    for n, t in store.items():
        assert (t.data == before[n]).all()
