from __future__ import annotations

import numpy as np
import pytest

from conftest import flat_quad, front_camera
from meshvr.core.camera import Camera, generate_ray
from meshvr.render import RenderModel, RenderSettings, ray_sample_points, render_image, render_pixel, render_view
from meshvr.spatial import brute_force_nearest, ray_active_intervals
from meshvr.synth.shapes import icosphere

BG = (0.1, 0.2, 0.3)


def _constant_color_model(mesh, color, scale: float) -> RenderModel:
    model = RenderModel.create(mesh, scale=scale, resolution=4, dims=(2, 2, 2), hidden=4, bands=1)
    for name, arr in model.decoder.arrays().items():
        setattr(model.decoder, name, np.zeros_like(arr))
    c = np.asarray(color, dtype=np.float64)
    model.decoder.b2 = np.log(c / (1.0 - c))
    return model


def test_ray_missing_the_mesh_shows_background():
    model = RenderModel.create(flat_quad(), scale=50.0, resolution=4, dims=(2, 2, 2), hidden=4)
    cam = Camera.look_at((0.0, 5.0, 3.0), (0.0, 5.0, 0.0), (0.0, 1.0, 0.0), focal=8.0, width=8, height=8)
    px = render_pixel(model, cam, (4.0, 4.0), RenderSettings(background=BG))
    assert px.opacity == 0.0
    assert not px.culled
    assert px.samples == ()
    np.testing.assert_allclose(px.color, BG)


def test_back_facing_surface_is_culled():
    model = RenderModel.create(flat_quad(), scale=50.0, resolution=4, dims=(2, 2, 2), hidden=4)
    cam = Camera.look_at((0.0, 0.0, -3.0), (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), focal=8.0, width=8, height=8)
    px = render_pixel(model, cam, (4.0, 4.0), RenderSettings(background=BG))
    assert px.culled
    assert px.opacity == 0.0
    assert len(px.samples) > 0
    assert not any(s.front_facing for s in px.samples)
    np.testing.assert_allclose(px.color, BG)


def test_constant_decoder_color_is_scaled_by_opacity():
    c = (0.2, 0.5, 0.7)
    model = _constant_color_model(flat_quad(), c, scale=200.0)
    px = render_pixel(model, front_camera(), (4.0, 4.0), RenderSettings(background=BG, jitter=False))
    assert not px.culled
    assert px.opacity > 0.9
    expected = np.asarray(c) * px.opacity + np.asarray(BG) * (1.0 - px.opacity)
    np.testing.assert_allclose(px.color, expected, atol=1e-12)
    assert px.weights.sum() == pytest.approx(px.opacity, abs=1e-12)


def test_sharp_density_is_nearly_opaque():
    c = (0.3, 0.3, 0.9)
    model = _constant_color_model(flat_quad(), c, scale=1e4)
    px = render_pixel(model, front_camera(), (4.0, 4.0), RenderSettings(band_factor=12.0, jitter=False))
    assert px.opacity > 0.999
    np.testing.assert_allclose(px.color, c, atol=1e-3)


def test_sample_distances_match_brute_force():
    mesh = icosphere(2)
    model = RenderModel.create(mesh, scale=40.0, resolution=4, dims=(2, 2, 2), hidden=4)
    cam = front_camera(16, 16, focal=20.0)
    for pixel in [(8.0, 8.0), (5.5, 9.25), (11.0, 3.5)]:
        px = render_pixel(model, cam, pixel, RenderSettings(n_samples=16), seed=3)
        assert len(px.samples) == 16
        pts = np.stack([s.position for s in px.samples])
        ref = brute_force_nearest(mesh, pts).distance
        np.testing.assert_allclose(np.abs([s.signed_distance for s in px.samples]), ref, atol=1e-9)
        assert (np.diff([s.t for s in px.samples]) > 0.0).all()


def test_render_is_independent_of_worker_count():
    model = RenderModel.create(icosphere(2), scale=40.0, resolution=4, dims=(2, 2, 2), hidden=4)
    cam = front_camera(12, 12, focal=14.0)
    rng = np.random.default_rng(0)
    pixels = rng.uniform(0.0, 12.0, size=(60, 2))
    one = render_view(model, cam, pixels, RenderSettings(chunk_rays=7, workers=1), seed=[4, 2], record=True)
    three = render_view(model, cam, pixels, RenderSettings(chunk_rays=7, workers=3), seed=[4, 2], record=True)
    np.testing.assert_array_equal(one.color, three.color)
    np.testing.assert_array_equal(one.opacity, three.opacity)
    g = rng.normal(size=(60, 3))
    g1, g3 = one.backward(g, None), three.backward(g, None)
    assert g1.keys() == g3.keys()
    for key in g1:
        np.testing.assert_array_equal(g1[key], g3[key])


def test_unrecorded_render_cannot_be_differentiated():
    model = RenderModel.create(icosphere(1), scale=20.0, resolution=4, dims=(2, 2, 2), hidden=4)
    res = render_view(model, front_camera(), np.array([[4.0, 4.0]]), RenderSettings(), record=False)
    with pytest.raises(RuntimeError, match="record"):
        res.backward(None, np.ones(1))


def test_geometry_only_render_has_geometry_slots():
    model = RenderModel.create(icosphere(1), scale=20.0, resolution=4, dims=(2, 2, 2), hidden=4)
    res = render_view(model, front_camera(), np.array([[4.0, 4.0]]), RenderSettings(with_color=False))
    grads = res.backward(None, np.ones(1))
    assert set(grads) <= {"vertices", "s"}
    assert grads["vertices"].shape == model.mesh.vertices.shape


def test_render_image_shapes_and_range():
    model = RenderModel.create(icosphere(1), scale=20.0, resolution=4, dims=(2, 2, 2), hidden=4)
    rgb, opacity = render_image(model, front_camera(10, 6, focal=8.0))
    assert rgb.shape == (6, 10, 3)
    assert opacity.shape == (6, 10)
    assert rgb.min() >= 0.0 and rgb.max() <= 1.0
    assert opacity[3, 5] > opacity[0, 0]


def test_ray_sample_points_are_filled_and_ordered():
    mesh = icosphere(2)
    model = RenderModel.create(mesh, scale=40.0, resolution=4, dims=(2, 2, 2), hidden=4)
    ray = generate_ray(front_camera(16, 16, focal=20.0), (8.0, 8.0))
    intervals = ray_active_intervals(model.octree, ray, model.density.band(4.0))
    samples = ray_sample_points(model, ray, intervals, 12, seed=1)
    assert len(samples) == 12
    assert (np.diff([s.t for s in samples]) > 0.0).all()
    pts = np.stack([s.position for s in samples])
    np.testing.assert_allclose(np.abs([s.signed_distance for s in samples]), brute_force_nearest(mesh, pts).distance,
                               atol=1e-9)
    for s in samples:
        assert s.front_facing == bool(s.normal @ ray[1] < 0.0)
    assert ray_sample_points(model, ray, np.zeros((0, 2)), 12) == ()
