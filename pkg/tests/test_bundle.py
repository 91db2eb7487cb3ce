from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from conftest import single_triangle, tiny_scene
from meshvr.bundle import (
    SceneBundle,
    View,
    load_scene,
    read_checkpoint,
    read_obj,
    save_scene,
    select_front_views,
    write_checkpoint,
    write_obj,
)
from meshvr.bundle.image_io import read_image, write_image
from meshvr.bundle.mesh_io import parse_obj
from meshvr.bundle.tables import read_landmarks, read_vertex_ids, write_metrics
from meshvr.core.errors import SceneValidationError
from meshvr.losses import LandmarkSet
from meshvr.synth.shapes import icosphere


def test_obj_parsing_triangulates_and_ignores_attributes():
    text = "\n".join(
        [
            "# quad",
            "o thing",
            "v 0 0 0",
            "v 1 0 0",
            "v 1 1 0",
            "v 0 1 0",
            "vt 0 0",
            "vn 0 0 1",
            "f 1/1/1 2/1/1 3/1/1 4/1/1",
            "f -4 -2 -1",
        ]
    )
    v, f = parse_obj(text)
    assert v.shape == (4, 3)
    assert f.tolist() == [[0, 1, 2], [0, 2, 3], [0, 2, 3]]


@pytest.mark.parametrize(
    "text,match",
    [
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", "1-based"),
        ("v 0 0 0\nf 1 2 3\n", "not yet defined"),
        ("v 0 0\n", "3 coordinates"),
        ("curv 1 2\n", "unsupported OBJ statement"),
    ],
)
def test_obj_parsing_errors(text: str, match: str):
    with pytest.raises(ValueError, match=match):
        parse_obj(text, source="bad.obj")


def test_obj_write_read_is_exact(tmp_path: Path):
    mesh = icosphere(1)
    rng = np.random.default_rng(0)
    mesh.set_vertices(mesh.vertices + rng.normal(scale=1e-3, size=mesh.vertices.shape))
    write_obj(tmp_path / "m.obj", mesh, header="test")
    back = read_obj(tmp_path / "m.obj")
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.faces, mesh.faces)
    with pytest.raises(FileNotFoundError):
        read_obj(tmp_path / "missing.obj")


@pytest.mark.parametrize("name,bits,tol", [("a.ppm", 16, 0.5 / 65535), ("a.ppm", 8, 0.5 / 255), ("a.png", 8, 0.5 / 255)])
def test_rgb_image_round_trip(tmp_path: Path, name: str, bits: int, tol: float):
    rng = np.random.default_rng(1)
    img = rng.uniform(0.0, 1.0, size=(5, 7, 3))
    write_image(tmp_path / name, img, bits=bits)
    back = read_image(tmp_path / name)
    assert back.shape == (5, 7, 3)
    assert np.abs(back - img).max() <= tol + 1e-12


def test_gray_image_and_format_errors(tmp_path: Path):
    mask = np.eye(4)
    write_image(tmp_path / "m.pgm", mask)
    np.testing.assert_array_equal(read_image(tmp_path / "m.pgm"), mask)
    with pytest.raises(ValueError, match="unsupported image format"):
        write_image(tmp_path / "m.tiff", mask)
    (tmp_path / "short.ppm").write_bytes(b"P6\n4 4\n255\n" + b"\x00" * 10)
    with pytest.raises(ValueError, match="truncated"):
        read_image(tmp_path / "short.ppm")


def test_checkpoint_dtypes_and_metadata(tmp_path: Path):
    x = np.array([[1.0 / 3.0, 2.0], [3.0, 4.0]])
    write_checkpoint(tmp_path / "a.mvr", {"b": x, "a": [1.5]}, {"kind": "model", "n": 3}, dtype="<f8")
    arrays, meta = read_checkpoint(tmp_path / "a.mvr")
    np.testing.assert_array_equal(arrays["b"], x)
    assert meta == {"kind": "model", "n": 3}
    write_checkpoint(tmp_path / "b.mvr", {"b": x}, {})
    arrays, _ = read_checkpoint(tmp_path / "b.mvr")
    assert arrays["b"][0, 0] == pytest.approx(1.0 / 3.0, rel=1e-7)
    assert arrays["b"][0, 0] != x[0, 0]
    (tmp_path / "c.mvr").write_bytes(b"NOTACKPT" + b"\x00" * 8)
    with pytest.raises(ValueError, match="bad magic"):
        read_checkpoint(tmp_path / "c.mvr")
    with pytest.raises(ValueError, match="dtype"):
        write_checkpoint(tmp_path / "d.mvr", {"b": x}, {}, dtype="<f2")


def test_scene_round_trip(tmp_path: Path):
    lm = LandmarkSet(np.array([0, 1]), np.array([2, 0]), np.array([[0.5, 1.25], [1.0, 0.75]]))
    scene = tiny_scene(size=3, n_views=3, landmarks=lm, holdout=(2,), scale_hint=1.5)
    manifest = save_scene(tmp_path / "s", scene, bits=16)
    back = load_scene(tmp_path / "s", validate_hashes=True)
    assert back.name == "tiny"
    assert back.n_views == 3
    assert back.holdout == (2,)
    assert back.scale_hint == 1.5
    assert [v.view_id for v in back.training_views()] == [0, 1]
    assert [v.view_id for v in back.holdout_views()] == [2]
    np.testing.assert_allclose(back.view(1).image, scene.view(1).image, atol=1e-5)
    np.testing.assert_array_equal(back.view(1).mask, scene.view(1).mask)
    np.testing.assert_allclose(back.view(2).camera.K, scene.view(2).camera.K)
    np.testing.assert_array_equal(back.landmarks.vertex_ids, [2, 0])
    assert back.manifest == manifest
    with pytest.raises(KeyError):
        back.view(7)


def test_scene_save_is_byte_stable(tmp_path: Path):
    scene = tiny_scene()
    save_scene(tmp_path / "a", scene)
    save_scene(tmp_path / "b", scene)
    assert (tmp_path / "a" / "scene.json").read_bytes() == (tmp_path / "b" / "scene.json").read_bytes()


def test_tampered_file_fails_hash_check(tmp_path: Path):
    save_scene(tmp_path / "s", tiny_scene())
    img = tmp_path / "s" / "images" / "view_000.ppm"
    data = bytearray(img.read_bytes())
    data[-1] ^= 0xFF
    img.write_bytes(bytes(data))
    load_scene(tmp_path / "s")
    with pytest.raises(ValueError, match="sha256 mismatch"):
        load_scene(tmp_path / "s", validate_hashes=True)


def test_scene_validation_names_the_view():
    scene = tiny_scene(size=2)
    bad = View(1, scene.view(1).camera, np.zeros((3, 2, 3)), np.zeros((3, 2)))
    with pytest.raises(SceneValidationError, match="view 1"):
        SceneBundle(name="x", template=single_triangle(), views=(scene.view(0), bad))
    with pytest.raises(SceneValidationError, match="holdout"):
        tiny_scene(holdout=(5,))
    with pytest.raises(SceneValidationError, match="at least 2 views"):
        SceneBundle(name="x", template=single_triangle(), views=(scene.view(0),))


def test_missing_manifest_and_unknown_schema(tmp_path: Path):
    with pytest.raises(FileNotFoundError):
        load_scene(tmp_path / "nowhere")
    save_scene(tmp_path / "s", tiny_scene())
    obj = json.loads((tmp_path / "s" / "scene.json").read_text(encoding="utf-8"))
    obj["schema_version"] = "meshvr-scene-0"
    (tmp_path / "s" / "scene.json").write_text(json.dumps(obj), encoding="utf-8")
    with pytest.raises(ValueError, match="schema_version"):
        load_scene(tmp_path / "s")


def test_landmark_csv_drops_contour_rows(tmp_path: Path):
    p = tmp_path / "lm.csv"
    p.write_text("view,vertex,u,v,contour\n0,1,2.5,3.5,0\n0,2,1.0,1.0,1\n1,0,0.5,0.5,\n", encoding="utf-8")
    lm = read_landmarks(p, n_vertices=3)
    assert lm.vertex_ids.tolist() == [1, 0]
    np.testing.assert_allclose(lm.pixels, [[2.5, 3.5], [0.5, 0.5]])
    with pytest.raises(SceneValidationError):
        read_landmarks(p, n_vertices=1)
    (tmp_path / "bad.csv").write_text("view,vertex,u\n0,1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing landmark columns"):
        read_landmarks(tmp_path / "bad.csv")


def test_metric_and_vertex_tables(tmp_path: Path):
    write_metrics(tmp_path / "m.csv", [{"scope": "mesh", "metric": "mean_distance", "value": 0.25}])
    lines = (tmp_path / "m.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["scope,metric,value", "mesh,mean_distance,0.25"]
    (tmp_path / "v.csv").write_text("vertex\n3\n1\n", encoding="utf-8")
    assert read_vertex_ids(tmp_path / "v.csv").tolist() == [3, 1]


def test_select_front_views():
    scene = tiny_scene(n_views=4)
    # view 2 sits on -z and looks along +z, away from the frontal axis
    picked = select_front_views(scene.views, 3, frontal_axis=(0.0, 0.0, -1.0))
    assert [v.view_id for v in picked] == [0, 1, 3]
    assert [v.view_id for v in select_front_views(scene.views, 1)] == [0]
    assert len(select_front_views(scene.views, 0)) == 4
