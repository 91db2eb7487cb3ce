from __future__ import annotations

import logging

import numpy as np
import pytest

from meshvr.core.errors import MissingVjpError, ShapeMismatchError
from meshvr.optim import AdamState, GradStore, ParamStore, Tape, adam_step, backward, fd_check
from meshvr.optim.adam import lr_for
from meshvr.optim.gradcheck import pick_indices


def _store() -> ParamStore:
    store = ParamStore()
    store.add("vertices", np.arange(6.0).reshape(2, 3))
    store.add("planes.xy", np.ones((2, 2, 1)))
    store.add("s", [10.0])
    return store


def test_param_store_shapes_and_learnable_flags():
    store = _store()
    with pytest.raises(KeyError, match="already exists"):
        store.add("s", [1.0])
    with pytest.raises(ShapeMismatchError):
        store["vertices"] = np.zeros((3, 3))
    store.freeze_all()
    store.set_learnable(["planes"])
    assert store.learnable_names() == ["planes.xy"]
    assert store.flat_size() == 6 + 4 + 1


def test_param_store_copy_is_deep():
    store = _store()
    other = store.copy()
    other.groups["vertices"][0, 0] = 99.0
    assert store["vertices"][0, 0] == 0.0


def test_scale_is_projected_positive():
    store = _store()
    store.groups["s"] = np.array([-3.0])
    store.project()
    assert store["s"][0] > 0.0


def test_tape_backward_sums_fan_in():
    tape = Tape()
    tape.record("weighted_sum", ("a", "b"), ("mid",), (2.0, 3.0))
    tape.record("weighted_sum", ("mid", "a"), ("loss",), (0.5, 1.0))
    grads = tape.backward({"loss": 1.0})
    # d loss / d a = 0.5 * 2 + 1
    assert float(grads["a"]) == pytest.approx(2.0)
    assert float(grads["b"]) == pytest.approx(1.5)


def test_backward_zeroes_frozen_groups():
    store = _store()
    store.set_learnable(["vertices"], False)
    tape = Tape()
    tape.record("scalar_loss", ("vertices", "s"), ("loss",), (np.ones((2, 3)), np.array([4.0])))
    grads = backward(tape, "loss", store, scale=2.0)
    np.testing.assert_array_equal(grads["vertices"], 0.0)
    np.testing.assert_allclose(grads["s"], [8.0])
    np.testing.assert_array_equal(grads["planes.xy"], 0.0)


def test_missing_vjp_is_reported():
    tape = Tape()
    tape.record("no_such_op", ("a",), ("loss",))
    with pytest.raises(MissingVjpError, match="no_such_op"):
        tape.backward({"loss": 1.0})


def test_adam_first_step_moves_by_learning_rate():
    store = _store()
    g = GradStore({"vertices": np.full((2, 3), 0.3), "planes.xy": -np.ones((2, 2, 1)), "s": np.array([5.0])})
    before = store.copy()
    state = AdamState()
    report = adam_step(store, g, {"vertices": 0.01, "planes": 0.1, "s": 1.0}, state)
    assert set(report.updated) == {"vertices", "planes.xy", "s"}
    # bias-corrected first step: lr * g / (|g| + eps)
    np.testing.assert_allclose(store["vertices"] - before["vertices"], -0.01 * 0.3 / (0.3 + 1e-8))
    np.testing.assert_allclose(store["planes.xy"] - before["planes.xy"], 0.1 * 1.0 / (1.0 + 1e-8))
    assert state.step["s"] == 1


def test_adam_rejects_non_finite_groups(caplog):
    store = _store()
    g = store.zeros()
    g.grads["s"] = np.array([np.nan])
    with caplog.at_level(logging.WARNING, logger="meshvr.optim.adam"):
        report = adam_step(store, g, {"vertices": 0.1, "planes": 0.1, "s": 0.1}, AdamState())
    assert report.rejected == ("s",)
    assert store["s"][0] == 10.0
    assert "non-finite" in caplog.text


def test_lr_lookup_prefers_exact_name():
    assert lr_for("planes.xy", {"planes": 0.1, "planes.xy": 0.2}) == 0.2
    assert lr_for("planes.yz", {"planes": 0.1}) == 0.1
    with pytest.raises(KeyError, match="decoder.w0"):
        lr_for("decoder.w0", {"planes": 0.1})


def _quadratic(store: ParamStore) -> float:
    return float((store["vertices"] ** 2).sum() + 3.0 * store["s"][0] ** 3)


def test_fd_check_passes_for_correct_gradient():
    store = _store()
    grads = GradStore({"vertices": 2.0 * store["vertices"], "s": 9.0 * store["s"] ** 2})
    subset = pick_indices(store, 4, np.random.default_rng(0), names=["vertices", "s"])
    report = fd_check(_quadratic, store, grads, subset, eps=1e-5)
    assert report.passed({})
    assert report.max_rel_err() < 1e-6
    assert {row["group"] for row in report.rows()} == {"vertices", "s"}


def test_fd_check_flags_wrong_gradient_and_bad_eps():
    store = _store()
    grads = GradStore({"vertices": 3.0 * store["vertices"], "s": 9.0 * store["s"] ** 2})
    report = fd_check(_quadratic, store, grads, {"vertices": np.array([1, 2])})
    assert not report.passed({})
    with pytest.raises(ValueError, match="eps"):
        fd_check(_quadratic, store, grads, {}, eps=1e-2)
