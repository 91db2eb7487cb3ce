from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from meshvr.core.camera import project_points
from meshvr.synth import (
    Ellipsoid,
    ProceduralTexture,
    SyntheticParams,
    TwoLobeBlob,
    build_synthetic_scene,
    camera_ring,
    icosphere,
    march_rays,
    sphere,
    surface_from_json,
    synth_scene,
    tessellate,
)
from meshvr.synth.oracle import camera_rays
from meshvr.synth.shapes import implicit


def _params(**kw) -> SyntheticParams:
    base = dict(shape="sphere", subdivisions=1, n_views=4, width=32, height=32, n_landmarks=20, seed=3)
    base.update(kw)
    return SyntheticParams(**base)


@pytest.mark.parametrize("subdiv,n_v,n_f", [(0, 12, 20), (2, 162, 320), (3, 642, 1280)])
def test_icosphere_counts_and_winding(subdiv: int, n_v: int, n_f: int):
    mesh = icosphere(subdiv, radius=2.0)
    assert (mesh.n_vertices, mesh.n_faces) == (n_v, n_f)
    np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 2.0)
    centroids = mesh.triangles().mean(axis=1)
    assert ((mesh.face_normals() * centroids).sum(axis=1) > 0.0).all()


def test_camera_ring_geometry():
    cams = camera_ring(6, distance=3.0, elevation_deg=20.0, width=16, height=16, bounding_radius=1.0)
    assert len(cams) == 6
    np.testing.assert_allclose(cams[0].center / np.linalg.norm(cams[0].center),
                               [0.0, np.sin(np.deg2rad(20.0)), np.cos(np.deg2rad(20.0))], atol=1e-12)
    for cam in cams:
        assert np.linalg.norm(cam.center) == pytest.approx(3.0)
        np.testing.assert_allclose(cam.forward, -cam.center / 3.0, atol=1e-12)
    assert cams[1].center[1] < 0.0 < cams[0].center[1]
    with pytest.raises(ValueError, match="outside the bounding sphere"):
        camera_ring(2, distance=1.0, elevation_deg=0.0, width=4, height=4, bounding_radius=1.0)


def test_march_rays_hits_sphere_at_expected_depth():
    surf = sphere(1.0)
    origin = np.array([0.0, 0.0, 3.0])
    dirs = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [0.3, 0.0, -1.0]])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    hit, t = march_rays(surf, origin, dirs)
    assert hit.tolist() == [True, False, True]
    assert t[0] == pytest.approx(2.0, abs=1e-9)
    assert np.isinf(t[1])
    p = origin + t[2] * dirs[2]
    assert implicit(surf, p)[0] == pytest.approx(0.0, abs=1e-9)


def test_sphere_mask_is_a_centred_disk():
    scene = build_synthetic_scene(_params(n_landmarks=0))
    radius_px = 0.5 * 32 / 1.15
    for view in scene.views:
        mask = view.mask
        rows, cols = np.nonzero(mask > 0.5)
        assert mask.sum() == pytest.approx(np.pi * radius_px**2, rel=0.1)
        assert cols.mean() + 0.5 == pytest.approx(16.0, abs=0.5)
        assert rows.mean() + 0.5 == pytest.approx(16.0, abs=0.5)
        r = np.hypot(cols + 0.5 - 16.0, rows + 0.5 - 16.0)
        assert r.max() <= radius_px + 1.0


def test_constant_texture_paints_every_foreground_pixel_the_same():
    scene = build_synthetic_scene(_params(texture="constant", n_landmarks=0))
    base = np.asarray(ProceduralTexture(kind="constant").base)
    for view in scene.views:
        fg = view.mask > 0.5
        np.testing.assert_allclose(view.image[fg], np.broadcast_to(base, view.image[fg].shape))
        np.testing.assert_array_equal(view.image[~fg], 0.0)


def test_waves_texture_is_bounded_and_varies():
    tex = ProceduralTexture(seed=4)
    pts = np.random.default_rng(0).normal(size=(500, 3))
    c = tex.color(pts)
    assert c.min() >= 0.02 and c.max() <= 0.98
    assert c.std(axis=0).min() > 0.01
    assert ProceduralTexture.from_json(tex.to_json()) == tex


def test_landmarks_land_inside_masks_of_frontal_views():
    scene = build_synthetic_scene(_params(shape="ellipsoid", subdivisions=2))
    lm = scene.landmarks
    assert lm is not None and len(lm) > 0
    for view_id, pix in zip(lm.view_ids, lm.pixels):
        view = scene.view(int(view_id))
        assert view.camera.forward @ np.array([0.0, 0.0, -1.0]) >= 0.5
        assert view.mask[int(pix[1]), int(pix[0])] == 1.0


def test_landmarks_sit_on_the_ground_truth_surface():
    params = _params(shape="blob", subdivisions=2)
    scene = build_synthetic_scene(params)
    surf = surface_from_json(scene.fixture["surface"])
    assert isinstance(surf, TwoLobeBlob)
    lm = scene.landmarks
    assert lm is not None
    cam = scene.view(int(lm.view_ids[0])).camera
    origin, dirs = camera_rays(cam, lm.pixels[:1])
    hit, _ = march_rays(surf, origin, dirs)
    assert hit[0]


def test_surface_json_round_trip_and_tessellation():
    ell = Ellipsoid((1.2, 0.9, 0.7), center=(0.1, 0.0, -0.2))
    assert surface_from_json(ell.to_json()) == ell
    dense = tessellate(ell, 3)
    np.testing.assert_allclose(implicit(ell, dense.vertices), 0.0, atol=1e-12)
    with pytest.raises(ValueError, match="unknown surface kind"):
        surface_from_json({"kind": "torus"})


def test_parameter_validation_and_frustum_check():
    with pytest.raises(ValueError, match="shape"):
        _params(shape="cube")
    with pytest.raises(ValueError, match="n_views"):
        _params(n_views=1)
    with pytest.raises(ValueError, match="leaves the image"):
        build_synthetic_scene(_params(fov_margin=0.5, n_landmarks=0))


def test_synth_scene_writes_a_loadable_bundle(tmp_path: Path):
    scene = synth_scene(_params(holdout=(1,)), tmp_path / "scene")
    assert (tmp_path / "scene" / "scene.json").is_file()
    assert scene.root == tmp_path / "scene"
    assert scene.holdout == (1,)
    assert scene.n_views == 4
    assert surface_from_json(scene.fixture["surface"]) == sphere(1.0)
    pix, _ = project_points(scene.view(0).camera, np.zeros((1, 3)))
    col, row = int(pix[0, 0]), int(pix[0, 1])
    assert scene.view(0).mask[row, col] == 1.0
