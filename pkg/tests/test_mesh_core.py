from __future__ import annotations

import logging

import numpy as np
import pytest

from conftest import UNIT_TRI, random_soup, single_triangle
from meshvr.core import (
    DegenerateTriangleError,
    SceneValidationError,
    TriangleMesh,
    closest_point_jacobians,
    closest_point_on_triangle,
    face_normal,
    laplacian_deltas,
    pseudo_normal,
    signed_distance,
)
from meshvr.spatial import brute_force_nearest, build
from meshvr.synth.shapes import icosphere

A, B, C = UNIT_TRI


def test_closest_point_face_interior():
    r = closest_point_on_triangle((0.25, 0.25, 1.0), A, B, C)
    assert r.region == "face"
    np.testing.assert_allclose(r.point, [0.25, 0.25, 0.0], atol=1e-12)
    assert r.distance == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(r.barycentric, [0.5, 0.25, 0.25], atol=1e-12)


def test_closest_point_vertex_and_edge_regions():
    v = closest_point_on_triangle((2.0, 0.0, 0.0), A, B, C)
    assert v.region == "vertex"
    np.testing.assert_allclose(v.point, B, atol=1e-12)
    assert v.distance == pytest.approx(1.0)

    e = closest_point_on_triangle((0.5, -1.0, 0.0), A, B, C)
    assert e.region == "edge"
    np.testing.assert_allclose(e.point, [0.5, 0.0, 0.0], atol=1e-12)
    assert e.distance == pytest.approx(1.0)


def test_closest_point_barycentric_reconstructs_point():
    rng = np.random.default_rng(3)
    for _ in range(50):
        tri = rng.normal(size=(3, 3))
        r = closest_point_on_triangle(rng.normal(size=3) * 2.0, *tri)
        assert r.barycentric.min() >= -1e-12
        assert r.barycentric.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(r.barycentric @ tri, r.point, atol=1e-9)


def test_closest_point_rejects_degenerate_triangle():
    with pytest.raises(DegenerateTriangleError):
        closest_point_on_triangle((0.0, 0.0, 1.0), A, B, 2.0 * B)


def test_face_normal_follows_winding():
    np.testing.assert_allclose(face_normal(single_triangle(), 0), [0.0, 0.0, 1.0], atol=1e-12)
    flipped = TriangleMesh(UNIT_TRI, [[0, 2, 1]])
    np.testing.assert_allclose(face_normal(flipped, 0), [0.0, 0.0, -1.0], atol=1e-12)


def test_face_normal_matches_cross_product():
    rng = np.random.default_rng(11)
    tri = rng.normal(size=(3, 3))
    mesh = TriangleMesh(tri, [[0, 1, 2]])
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    np.testing.assert_allclose(face_normal(mesh, 0), n / np.linalg.norm(n), atol=1e-12)
    assert np.linalg.norm(face_normal(mesh, 0)) == pytest.approx(1.0, abs=1e-9)


def test_pseudo_normal_at_right_angle_edge():
    # faces with normals +z and +y sharing the edge (0,0,0)-(1,0,0)
    verts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, -1.0, 0.0], [0.5, 0.0, -1.0]]
    mesh = TriangleMesh(verts, [[0, 2, 1], [0, 1, 3]])
    np.testing.assert_allclose(face_normal(mesh, 0), [0.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(face_normal(mesh, 1), [0.0, 1.0, 0.0], atol=1e-12)

    r = signed_distance(mesh, build(mesh), (0.5, 1.0, 1.0))
    assert r.region == "edge"
    h = np.sqrt(0.5)
    np.testing.assert_allclose(pseudo_normal(mesh, r), [0.0, h, h], atol=1e-9)
    assert r.signed_distance == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_pseudo_normal_coplanar_edge_and_interior():
    mesh = TriangleMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])
    tree = build(mesh)
    on_edge = signed_distance(mesh, tree, (0.5, 0.5, 0.4))
    np.testing.assert_allclose(pseudo_normal(mesh, on_edge), [0.0, 0.0, 1.0], atol=1e-12)
    inside = signed_distance(mesh, tree, (0.8, 0.2, 0.4))
    assert inside.region == "face"
    np.testing.assert_allclose(pseudo_normal(mesh, inside), face_normal(mesh, inside.face_id), atol=1e-12)


def test_signed_distance_flat_triangle_sides():
    mesh = single_triangle()
    tree = build(mesh)
    centroid = UNIT_TRI.mean(axis=0)
    above = signed_distance(mesh, tree, centroid + [0.0, 0.0, 0.3])
    below = signed_distance(mesh, tree, centroid - [0.0, 0.0, 0.3])
    assert above.signed_distance == pytest.approx(0.3, abs=1e-12)
    assert below.signed_distance == pytest.approx(-0.3, abs=1e-12)
    on = signed_distance(mesh, tree, centroid)
    assert on.signed_distance == 0.0


def test_signed_distance_matches_per_triangle_loop():
    rng = np.random.default_rng(5)
    mesh = random_soup(rng, 100)
    tree = build(mesh)
    tris = mesh.triangles()
    for p in rng.uniform(-1.5, 1.5, size=(20, 3)):
        r = signed_distance(mesh, tree, p)
        best = min(closest_point_on_triangle(p, *t).distance for t in tris)
        assert abs(r.distance - best) < 1e-9
        assert abs(abs(r.signed_distance) - r.distance) < 1e-12


def test_signed_distance_500_triangles_vs_brute_force():
    rng = np.random.default_rng(17)
    mesh = random_soup(rng, 500)
    pts = rng.uniform(-1.2, 1.2, size=(1000, 3))
    fast = build(mesh).nearest_triangles(mesh, pts)
    slow = brute_force_nearest(mesh, pts)
    np.testing.assert_allclose(fast.distance, slow.distance, atol=1e-9, rtol=0)


def test_jacobians_face_interior_case():
    p = np.array([0.25, 0.25, 1.0])
    r = closest_point_on_triangle(p, A, B, C)
    jac = closest_point_jacobians(p, UNIT_TRI, r)
    np.testing.assert_allclose(jac.d_point, [0.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(jac.d_vertices[0], [0.0, 0.0, -0.5], atol=1e-12)
    np.testing.assert_allclose(jac.d_vertices[1:], [[0.0, 0.0, -0.25]] * 2, atol=1e-12)


def test_jacobians_vertex_region_moves_only_nearest_vertex():
    p = np.array([2.0, 0.0, 0.0])
    r = closest_point_on_triangle(p, A, B, C)
    jac = closest_point_jacobians(p, UNIT_TRI, r)
    np.testing.assert_allclose(jac.d_vertices[1], [-1.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(jac.d_vertices[[0, 2]], 0.0, atol=1e-12)


def test_jacobians_zero_distance_flagged():
    p = np.array([0.2, 0.2, 0.0])
    jac = closest_point_jacobians(p, UNIT_TRI, closest_point_on_triangle(p, A, B, C))
    assert jac.zero_distance
    assert not jac.d_point.any()


def test_jacobians_match_central_differences():
    rng = np.random.default_rng(23)
    eps = 1e-6

    def dist(p: np.ndarray, tri: np.ndarray) -> float:
        return closest_point_on_triangle(p, *tri).distance

    for _ in range(200):
        tri = rng.normal(size=(3, 3))
        p = rng.normal(size=3) * 1.5
        r = closest_point_on_triangle(p, *tri)
        if r.distance < 0.05:
            continue
        jac = closest_point_jacobians(p, tri, r)
        num_p = np.array([(dist(p + eps * e, tri) - dist(p - eps * e, tri)) / (2 * eps) for e in np.eye(3)])
        np.testing.assert_allclose(jac.d_point, num_p, rtol=1e-4, atol=1e-6)
        num_v = np.zeros((3, 3))
        for k in range(3):
            for j in range(3):
                tp, tm = tri.copy(), tri.copy()
                tp[k, j] += eps
                tm[k, j] -= eps
                num_v[k, j] = (dist(p, tp) - dist(p, tm)) / (2 * eps)
        np.testing.assert_allclose(jac.d_vertices, num_v, rtol=1e-4, atol=1e-6)


def test_mesh_validation_reports_every_problem():
    with pytest.raises(SceneValidationError) as exc:
        TriangleMesh(UNIT_TRI, [[0, 1, 5], [1, 1, 2]])
    msg = str(exc.value)
    assert "out of range" in msg
    assert "repeated vertex index" in msg
    assert len(exc.value.violations) == 2


def test_mesh_rejects_zero_area_face():
    with pytest.raises(DegenerateTriangleError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])


def test_faces_are_immutable_and_vertices_read_only():
    mesh = single_triangle()
    before = mesh.faces_bytes()
    with pytest.raises(ValueError):
        mesh.faces[0, 0] = 2
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 5.0
    mesh.set_vertices(mesh.vertices + 1.0)
    assert mesh.revision == 1
    assert mesh.faces_bytes() == before
    with pytest.raises(ValueError, match="expected shape"):
        mesh.set_vertices(np.zeros((4, 3)))


def test_adjacency_is_symmetric():
    mesh = icosphere(2)
    adj = mesh.adjacency()
    for i, nbrs in enumerate(adj):
        for j in nbrs:
            assert i in adj[j]
    assert {len(n) for n in adj} == {5, 6}


def test_laplacian_hand_example():
    mesh = TriangleMesh([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 2.0, 0.0]], [[0, 1, 2]])
    np.testing.assert_allclose(laplacian_deltas(mesh)[0], [1.0, -1.0, 0.0], atol=1e-12)


def test_laplacian_zero_at_grid_interior_vertex():
    xs, ys = np.meshgrid(np.arange(3.0), np.arange(3.0))
    verts = np.stack([xs.ravel(), ys.ravel(), np.zeros(9)], axis=1)
    faces = []
    for r in range(2):
        for c in range(2):
            i = 3 * r + c
            faces += [[i, i + 1, i + 4], [i, i + 4, i + 3]]
    deltas = laplacian_deltas(TriangleMesh(verts, faces))
    np.testing.assert_allclose(deltas[4], 0.0, atol=1e-12)


def test_laplacian_matches_dense_oracle():
    mesh = icosphere(2)
    rng = np.random.default_rng(2)
    mesh.set_vertices(mesh.vertices + rng.normal(scale=0.05, size=mesh.vertices.shape))
    n = mesh.n_vertices
    dense = np.zeros((n, n))
    for f in mesh.faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            dense[a, b] = dense[b, a] = 1.0
    lap = np.eye(n) - dense / dense.sum(axis=1, keepdims=True)
    expected = lap @ mesh.vertices
    got = laplacian_deltas(mesh)
    np.testing.assert_allclose(got, expected, atol=1e-9)
    assert abs(got.sum() - expected.sum()) < 1e-9


def test_isolated_vertex_gets_zero_delta_with_warning(caplog):
    mesh = TriangleMesh(np.vstack([UNIT_TRI, [[5.0, 5.0, 5.0]]]), [[0, 1, 2]])
    with caplog.at_level(logging.WARNING, logger="meshvr.core.mesh"):
        deltas = laplacian_deltas(mesh)
    np.testing.assert_allclose(deltas[3], 0.0)
    assert "isolated" in caplog.text


def test_error_families():
    from meshvr.core import errors

    input_errors = (
        errors.DegenerateTriangleError, errors.EmptyMeshError, errors.StaleIndexError, errors.BehindCameraError,
        errors.ShapeMismatchError, errors.MissingLossComponentError, errors.NoValidPixelsError,
        errors.SceneValidationError,
    )
    assert all(issubclass(e, ValueError) for e in input_errors)
    for internal in (errors.MissingVjpError, errors.TrainingDivergedError):
        assert issubclass(internal, RuntimeError)
        assert not issubclass(internal, ValueError)
    assert "RuntimeError" in errors.__doc__
