from __future__ import annotations

import logging

import numpy as np
import pytest

from meshvr.appearance import (
    MlpDecoder,
    PositionalEncoding,
    TriPlanes,
    decode,
    positional_encoding,
    sample_triplanes,
    triplanes_feature_vjp,
    triplanes_point_vjp,
)
from meshvr.core.errors import ShapeMismatchError


def _planes(resolution: int = 5, dims=(3, 2, 2), seed: int = 0) -> TriPlanes:
    rng = np.random.default_rng(seed)
    return TriPlanes.create(
        [-1.0, -1.0, -1.0], [1.0, 1.0, 1.0], resolution=resolution, dims=dims, init_scale=1.0, rng=rng
    )


def _node_coord(planes: TriPlanes, i: int) -> float:
    return -1.0 + 2.0 * i / (planes.resolution - 1)


def _bilinear_oracle(grid: np.ndarray, u: float, v: float) -> np.ndarray:
    i0, j0 = int(np.floor(u)), int(np.floor(v))
    i0, j0 = min(i0, grid.shape[0] - 2), min(j0, grid.shape[1] - 2)
    a, b = u - i0, v - j0
    return (
        (1 - a) * (1 - b) * grid[i0, j0]
        + a * (1 - b) * grid[i0 + 1, j0]
        + (1 - a) * b * grid[i0, j0 + 1]
        + a * b * grid[i0 + 1, j0 + 1]
    )


def test_grid_node_returns_node_features():
    tp = _planes()
    p = [_node_coord(tp, 1), _node_coord(tp, 3), _node_coord(tp, 2)]
    f = sample_triplanes(tp, p).features[0]
    np.testing.assert_allclose(f, np.concatenate([tp.xy[1, 3], tp.xz[1, 2], tp.yz[3, 2]]), atol=1e-12)


def test_cell_center_is_mean_of_corners():
    tp = _planes()
    c = 0.5 * (_node_coord(tp, 1) + _node_coord(tp, 2))
    f = sample_triplanes(tp, [c, c, c]).features[0]
    np.testing.assert_allclose(f[:3], tp.xy[1:3, 1:3].reshape(4, 3).mean(axis=0), atol=1e-12)


def test_random_points_match_bilinear_oracle():
    tp = _planes(resolution=7, seed=1)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1.0, 1.0, size=(40, 3))
    feats = sample_triplanes(tp, pts).features
    for p, f in zip(pts, feats):
        g = (p + 1.0) / 2.0 * (tp.resolution - 1)
        expected = np.concatenate([
            _bilinear_oracle(tp.xy, g[0], g[1]),
            _bilinear_oracle(tp.xz, g[0], g[2]),
            _bilinear_oracle(tp.yz, g[1], g[2]),
        ])
        np.testing.assert_allclose(f, expected, atol=1e-12)


def test_out_of_bounds_points_are_clamped_and_flagged():
    tp = _planes()
    s = sample_triplanes(tp, [[5.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert s.clamped.tolist() == [True, False]
    edge = sample_triplanes(tp, [[1.0, 0.0, 0.0]]).features[0]
    np.testing.assert_allclose(s.features[0], edge, atol=1e-12)


def test_piecewise_bilinear_second_difference_vanishes():
    tp = _planes(resolution=4, seed=3)
    h = 0.05
    base = np.array([-0.2, 0.1, 0.15])
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        f = [sample_triplanes(tp, base + k * e).features[0] for k in (-1, 0, 1)]
        np.testing.assert_allclose(f[0] - 2 * f[1] + f[2], 0.0, atol=1e-9)


def test_triplane_vjps_match_central_differences():
    tp = _planes(resolution=4, seed=4)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.9, 0.9, size=(6, 3))
    w = rng.normal(size=(6, tp.feature_dim))

    def loss(planes: TriPlanes, points: np.ndarray) -> float:
        return float((sample_triplanes(planes, points).features * w).sum())

    sample = sample_triplanes(tp, pts)
    g_planes = triplanes_feature_vjp(tp, sample, w)
    g_pts = triplanes_point_vjp(tp, sample, w)
    eps = 1e-6
    for name in ("xy", "xz", "yz"):
        grid = tp.plane(name)
        for idx in [(0, 0, 0), (1, 2, 1), (2, 1, 0)]:
            old = grid[idx]
            grid[idx] = old + eps
            up = loss(tp, pts)
            grid[idx] = old - eps
            down = loss(tp, pts)
            grid[idx] = old
            assert g_planes[name][idx] == pytest.approx((up - down) / (2 * eps), rel=1e-4, abs=1e-8)
    for i in range(pts.shape[0]):
        for j in range(3):
            pp, pm = pts.copy(), pts.copy()
            pp[i, j] += eps
            pm[i, j] -= eps
            assert g_pts[i, j] == pytest.approx((loss(tp, pp) - loss(tp, pm)) / (2 * eps), rel=1e-4, abs=1e-8)


def test_enclosing_planes_have_margin():
    tp = TriPlanes.enclosing([0.0, 0.0, 0.0], [1.0, 2.0, 1.0], margin=0.1, resolution=4, dims=(2, 2, 2))
    np.testing.assert_allclose(tp.bounds_min, [-0.2, -0.2, -0.2])
    np.testing.assert_allclose(tp.bounds_max, [1.2, 2.2, 1.2])


def test_positional_encoding_examples():
    enc = positional_encoding([0.0, 0.0, 1.0], bands=1)
    # x component 0: (0, sin 0, cos 0); z component 1: (1, sin pi, cos pi)
    np.testing.assert_allclose(enc[:3], [0.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(enc[6:], [1.0, 0.0, -1.0], atol=1e-12)
    assert positional_encoding([1.0, 0.0, 0.0]).shape == (27,)
    assert PositionalEncoding(4).dim == 27


def test_positional_encoding_zero_component():
    enc = positional_encoding([1.0, 0.0, 0.0], bands=3).reshape(3, 7)
    np.testing.assert_allclose(enc[1, 1::2], 0.0, atol=1e-12)
    np.testing.assert_allclose(enc[1, 2::2], 1.0, atol=1e-12)


def test_positional_encoding_normalises_with_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="meshvr.appearance.encoding"):
        enc = positional_encoding([0.0, 0.0, 2.0], bands=1)
    assert "non-unit" in caplog.text
    np.testing.assert_allclose(enc, positional_encoding([0.0, 0.0, 1.0], bands=1))


def test_decoder_zero_weights_give_mid_gray():
    dec = MlpDecoder.create(5, hidden=4)
    for name, arr in dec.arrays().items():
        setattr(dec, name, np.zeros_like(arr))
    np.testing.assert_allclose(decode(dec, np.zeros(2), np.ones(3)), [0.5, 0.5, 0.5])


def test_decoder_matches_hand_arithmetic():
    dec = MlpDecoder(
        w0=np.array([[1.0, -1.0], [0.5, 2.0]]),
        b0=np.array([0.0, 0.1]),
        w1=np.array([[1.0, 0.0], [0.0, 1.0]]),
        b1=np.array([-0.5, 0.0]),
        w2=np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 1.0]]),
        b2=np.array([0.0, 0.0, 0.0]),
    )
    x = np.array([1.0, 1.0])
    h0 = np.maximum(x @ dec.w0 + dec.b0, 0.0)
    h1 = np.maximum(h0 @ dec.w1 + dec.b1, 0.0)
    expected = 1.0 / (1.0 + np.exp(-(h1 @ dec.w2 + dec.b2)))
    # features [1], encoded view [1]
    np.testing.assert_allclose(decode(dec, [1.0], [1.0]), expected, atol=1e-12)


def test_decoder_output_bounded_and_shape_checked():
    rng = np.random.default_rng(6)
    dec = MlpDecoder.create(6, hidden=8, rng=rng)
    for name, arr in dec.arrays().items():
        setattr(dec, name, arr * 50.0)
    out = decode(dec, rng.normal(size=(100, 3)), rng.normal(size=(100, 3)))
    assert out.min() >= 0.0 and out.max() <= 1.0
    with pytest.raises(ShapeMismatchError):
        decode(dec, np.zeros(3), np.zeros(4))


def test_decoder_backward_matches_central_differences():
    rng = np.random.default_rng(8)
    dec = MlpDecoder.create(4, hidden=6, rng=rng)
    x = rng.normal(size=(5, 4))
    w = rng.normal(size=(5, 3))
    out, cache = dec.forward(x)
    gx, gp = dec.backward(cache, w)
    eps = 1e-6

    def loss() -> float:
        return float((dec.forward(x)[0] * w).sum())

    for name in ("w0", "b1", "w2"):
        arr = getattr(dec, name)
        flat = arr.reshape(-1)
        for k in range(0, flat.size, max(1, flat.size // 4)):
            old = flat[k]
            flat[k] = old + eps
            up = loss()
            flat[k] = old - eps
            down = loss()
            flat[k] = old
            assert gp[name].reshape(-1)[k] == pytest.approx((up - down) / (2 * eps), rel=1e-4, abs=1e-8)
    x0 = x.copy()
    for i, j in [(0, 0), (3, 2)]:
        x[i, j] = x0[i, j] + eps
        up = loss()
        x[i, j] = x0[i, j] - eps
        down = loss()
        x[i, j] = x0[i, j]
        assert gx[i, j] == pytest.approx((up - down) / (2 * eps), rel=1e-4, abs=1e-8)
