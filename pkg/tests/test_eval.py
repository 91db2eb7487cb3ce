from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from meshvr.bundle.mesh_io import write_obj
from meshvr.core.errors import NoValidPixelsError, ShapeMismatchError
from meshvr.eval import ellipsoid_distance, eval_geometry, eval_render, load_reference, psnr, ssim
from meshvr.synth import Ellipsoid, SyntheticParams, icosphere, sphere, synth_scene, tessellate


def test_identical_mesh_has_zero_error():
    mesh = icosphere(2)
    report = eval_geometry(mesh, mesh)
    assert report.mean_distance == pytest.approx(0.0, abs=1e-12)
    assert report.n_included == mesh.n_vertices


def test_scaled_sphere_error_against_analytic_reference():
    report = eval_geometry(icosphere(2, radius=1.1), sphere(1.0))
    assert report.mean_distance == pytest.approx(0.1, abs=1e-9)
    assert report.max_distance == pytest.approx(0.1, abs=1e-9)


def test_ellipsoid_distance_on_axes_and_surface():
    ell = Ellipsoid((2.0, 1.0, 0.5))
    pts = np.array([[3.0, 0.0, 0.0], [0.0, 0.0, 1.5], [0.0, 0.0, 0.25]])
    np.testing.assert_allclose(ellipsoid_distance(ell, pts), [1.0, 1.0, 0.25], atol=1e-9)
    on = tessellate(ell, 3).vertices
    np.testing.assert_allclose(ellipsoid_distance(ell, on), 0.0, atol=1e-9)


def test_ellipsoid_distance_matches_dense_mesh():
    ell = Ellipsoid((1.3, 1.0, 0.8))
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 3))
    pts = 1.5 * pts / np.linalg.norm(pts, axis=1, keepdims=True)
    exact = ellipsoid_distance(ell, pts)
    dense = eval_geometry(pts, tessellate(ell, 5)).distances
    assert exact.min() >= 0.0
    np.testing.assert_allclose(dense, exact, atol=2e-3)
    assert (dense >= exact - 1e-9).all()


def test_excluded_vertices_are_left_out_of_the_mean():
    mesh = icosphere(1)
    verts = mesh.vertices.copy()
    verts[0] *= 2.0
    report = eval_geometry(verts, sphere(1.0), exclude=[0])
    assert report.mean_distance == pytest.approx(0.0, abs=1e-9)
    assert report.distances[0] == pytest.approx(1.0)
    assert not report.included[0]
    with pytest.raises(ValueError, match="out of range"):
        eval_geometry(verts, sphere(1.0), exclude=[999])
    with pytest.raises(ValueError, match="every vertex"):
        eval_geometry(verts[:1], sphere(1.0), exclude=[0])


def test_load_reference_from_obj_and_scene(tmp_path: Path):
    write_obj(tmp_path / "ref.obj", icosphere(1))
    assert load_reference(tmp_path / "ref.obj").n_vertices == 42
    params = SyntheticParams(shape="ellipsoid", subdivisions=1, n_views=2, width=8, height=8, n_landmarks=0)
    synth_scene(params, tmp_path / "scene")
    assert load_reference(tmp_path / "scene") == Ellipsoid(params.axes)
    with pytest.raises(FileNotFoundError):
        load_reference(tmp_path / "nothing")


def test_psnr_examples():
    a = np.zeros((4, 4, 3))
    assert psnr(a, a) == float("inf")
    assert psnr(a, np.full((4, 4, 3), 0.1)) == pytest.approx(20.0)
    mask = np.zeros((4, 4))
    mask[0, 0] = 1.0
    b = np.full((4, 4, 3), 0.5)
    b[0, 0] = 0.0
    assert psnr(a, b, mask) == float("inf")


def test_ssim_examples():
    rng = np.random.default_rng(2)
    img = rng.uniform(0.0, 1.0, size=(24, 24, 3))
    assert ssim(img, img) == pytest.approx(1.0)
    assert ssim(img, 1.0 - img) < 0.1
    assert ssim(img, np.clip(img + rng.normal(scale=0.02, size=img.shape), 0, 1)) > 0.8


def test_render_report_and_errors():
    x = np.full((6, 6), 0.2)
    y = np.full((6, 6), 0.3)
    mask = np.zeros((6, 6))
    mask[2:4, 2:4] = 1.0
    report = eval_render(x, y, mask)
    assert report.n_pixels == 4
    assert report.psnr == pytest.approx(20.0)
    with pytest.raises(NoValidPixelsError):
        psnr(x, y, np.zeros((6, 6)))
    with pytest.raises(ShapeMismatchError):
        ssim(x, np.zeros((5, 6)))
