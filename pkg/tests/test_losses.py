from __future__ import annotations

import logging

import numpy as np
import pytest

from conftest import front_camera
from meshvr.core.camera import project_points
from meshvr.core.errors import MissingLossComponentError, NoValidPixelsError, SceneValidationError
from meshvr.losses import (
    LandmarkSet,
    LossWeights,
    color_l1,
    landmark_loss,
    laplacian_loss,
    mask_boundary,
    mask_contour_band,
    mask_loss,
    scaled_band_radius,
    stage_coefficients,
    total_loss,
    tv_cell_count,
    tv_loss,
)
from meshvr.synth.shapes import icosphere


def test_color_l1_masks_invalid_pixels():
    rendered = np.array([[0.5, 0.5, 0.5], [1.0, 1.0, 1.0]])
    loss, grad = color_l1(rendered, np.zeros((2, 3)), [True, False])
    assert loss == pytest.approx(0.5)
    np.testing.assert_allclose(grad[0], 1.0 / 3.0)
    np.testing.assert_array_equal(grad[1], 0.0)
    with pytest.raises(NoValidPixelsError):
        color_l1(rendered, np.zeros((2, 3)), [False, False])


def test_tv_examples():
    assert tv_loss([np.full((4, 4, 2), 0.7)])[0] == 0.0
    ramp = np.repeat(np.arange(3.0)[:, None], 3, axis=1)
    assert tv_loss([ramp])[0] == pytest.approx(4.0)
    assert tv_cell_count([ramp, np.zeros((5, 2, 3))]) == 4 + 4


def test_tv_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    plane = rng.normal(size=(4, 5, 2))
    _, (grad,) = tv_loss([plane])
    eps = 1e-6
    for idx in [(0, 0, 0), (1, 2, 1), (3, 4, 0), (2, 0, 1)]:
        up, down = plane.copy(), plane.copy()
        up[idx] += eps
        down[idx] -= eps
        num = (tv_loss([up])[0] - tv_loss([down])[0]) / (2 * eps)
        assert grad[idx] == pytest.approx(num, rel=1e-5, abs=1e-8)


def test_mask_boundary_uses_eight_connectivity():
    mask = np.zeros((5, 5))
    mask[1:4, 1:4] = 1.0
    edge = mask_boundary(mask)
    assert edge.sum() == 8
    assert not edge[2, 2]


def test_contour_band_radius():
    mask = np.zeros((9, 9))
    mask[3:6, 3:6] = 1.0
    band = mask_contour_band(mask, radius=1)
    assert band.sum() == 25
    assert band[2:7, 2:7].all()


def test_full_mask_has_empty_band(caplog):
    with caplog.at_level(logging.WARNING, logger="meshvr.losses.silhouette"):
        band = mask_contour_band(np.ones((6, 6)), radius=2)
    assert not band.any()
    assert "no contour" in caplog.text


def test_scaled_band_radius():
    assert scaled_band_radius(8, 256, 128) == 2
    assert scaled_band_radius(8, 10, 10) == 1
    assert scaled_band_radius(8, 1024, 2048) == 16


def test_mask_loss_with_culled_pixels():
    loss, grad = mask_loss([0.5, 1.0], [1.0, 1.0], culled=[False, True])
    assert loss == pytest.approx(0.625)
    np.testing.assert_allclose(grad, [-0.5, 0.0])
    with pytest.raises(NoValidPixelsError):
        mask_loss([], [])


def test_landmark_loss_zero_at_exact_projection_and_gradient():
    cam = front_camera(32, 32, focal=30.0)
    rng = np.random.default_rng(1)
    verts = rng.uniform(-0.5, 0.5, size=(6, 3))
    pix, _ = project_points(cam, verts[[1, 4]])
    exact = LandmarkSet(np.array([0, 0]), np.array([1, 4]), pix)
    loss, grad = landmark_loss(verts, {0: cam}, exact)
    assert loss == pytest.approx(0.0, abs=1e-18)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    shifted = LandmarkSet(np.array([0, 0]), np.array([1, 4]), pix + [[1.0, -2.0], [0.5, 0.5]])
    assert landmark_loss(verts, {0: cam}, shifted)[0] == pytest.approx(5.0 + 0.5)
    _, grad = landmark_loss(verts, {0: cam}, shifted)
    eps = 1e-6
    for i, j in [(1, 0), (1, 2), (4, 1)]:
        vp, vm = verts.copy(), verts.copy()
        vp[i, j] += eps
        vm[i, j] -= eps
        num = (landmark_loss(vp, {0: cam}, shifted)[0] - landmark_loss(vm, {0: cam}, shifted)[0]) / (2 * eps)
        assert grad[i, j] == pytest.approx(num, rel=1e-5)
    np.testing.assert_array_equal(grad[[0, 2, 3, 5]], 0.0)


def test_landmark_behind_camera_is_skipped(caplog):
    cam = front_camera()
    verts = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 5.0]])
    lm = LandmarkSet(np.array([0, 0]), np.array([0, 1]), np.array([[4.0, 4.0], [4.0, 4.0]]))
    with caplog.at_level(logging.WARNING, logger="meshvr.losses.geometric"):
        loss, grad = landmark_loss(verts, {0: cam}, lm)
    assert loss == pytest.approx(0.0, abs=1e-18)
    np.testing.assert_array_equal(grad[1], 0.0)
    assert "behind-camera" in caplog.text


def test_landmark_set_validation():
    with pytest.raises(ValueError, match="equal length"):
        LandmarkSet(np.array([0]), np.array([0, 1]), np.zeros((2, 2)))
    lm = LandmarkSet(np.array([0, 1]), np.array([0, 9]), np.zeros((2, 2)))
    with pytest.raises(SceneValidationError, match="out of range"):
        lm.validate(5)
    assert lm.views == [0, 1]
    assert len(lm.subset({1})) == 1


def test_laplacian_loss_gradient():
    mesh = icosphere(1)
    rng = np.random.default_rng(2)
    verts = mesh.vertices + rng.normal(scale=0.05, size=mesh.vertices.shape)
    loss, grad = laplacian_loss(mesh, verts)
    assert loss > 0.0
    eps = 1e-6
    for i, j in [(0, 0), (5, 1), (11, 2)]:
        vp, vm = verts.copy(), verts.copy()
        vp[i, j] += eps
        vm[i, j] -= eps
        num = (laplacian_loss(mesh, vp)[0] - laplacian_loss(mesh, vm)[0]) / (2 * eps)
        assert grad[i, j] == pytest.approx(num, rel=1e-5, abs=1e-9)


def test_stage_coefficients_and_tv_schedule():
    w = LossWeights()
    assert stage_coefficients("1a", w) == {"ldmk": 1.0, "lap": 19.0}
    assert stage_coefficients("2", w, iteration=0, n_iterations=11)["tv"] == pytest.approx(1e-2)
    assert stage_coefficients("2", w, iteration=10, n_iterations=11)["tv"] == pytest.approx(1e-3)
    assert stage_coefficients("2", w, iteration=5, n_iterations=11)["tv"] == pytest.approx(5.5e-3)
    with pytest.raises(ValueError, match="unknown stage"):
        stage_coefficients("4", w)
    with pytest.raises(ValueError, match="lap"):
        LossWeights(lap=-1.0)


def test_total_loss_weights_components():
    report = total_loss("3", {"color": 0.2, "lap": 0.01, "mask": 5.0}, LossWeights())
    assert report.total == pytest.approx(0.2 + 0.19)
    assert set(report.components) == {"color", "lap"}
    with pytest.raises(MissingLossComponentError, match="lap"):
        total_loss("1b", {"mask": 1.0}, LossWeights())
