"""Shared pytest setup: `src/` on sys.path plus small mesh, camera and scene builders.

The path tweak lets the suite run from a checkout without an editable install.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

import numpy as np


def pytest_configure() -> None:
    repo_root = Path(__file__).resolve().parents[1]
    src_dir = repo_root / "src"
    sys.path.insert(0, str(src_dir))


# =============================================================================
# Shared builders (imported lazily so pytest_configure runs first)
# =============================================================================


UNIT_TRI = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def single_triangle() -> Any:
    from meshvr.core.mesh import TriangleMesh

    return TriangleMesh(UNIT_TRI, [[0, 1, 2]])


def random_soup(rng: np.random.Generator, n_faces: int, scale: float = 1.0) -> Any:
    """Triangle soup: n_faces independent random triangles."""
    from meshvr.core.mesh import TriangleMesh

    verts = rng.uniform(-scale, scale, size=(3 * n_faces, 3))
    return TriangleMesh(verts, np.arange(3 * n_faces).reshape(-1, 3))


def flat_quad(half: float = 1.0, z: float = 0.0) -> Any:
    """Square in the plane z=const, normals +z."""
    from meshvr.core.mesh import TriangleMesh

    v = [[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]]
    return TriangleMesh(v, [[0, 1, 2], [0, 2, 3]])


def front_camera(width: int = 8, height: int = 8, focal: float = 8.0, distance: float = 3.0) -> Any:
    """Camera on +z looking at the origin (the frontal view)."""
    from meshvr.core.camera import Camera

    return Camera.look_at((0.0, 0.0, distance), (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), focal=focal, width=width, height=height)


def tiny_scene(size: int = 2, n_views: int = 2, **kwargs: Any) -> Any:
    """One-triangle template seen by n_views cameras with blank images."""
    from meshvr.bundle.scene import SceneBundle, View
    from meshvr.synth.fixture import camera_ring

    cams = camera_ring(n_views, distance=3.0, elevation_deg=10.0, width=size, height=size, bounding_radius=1.0)
    views = tuple(
        View(k, cam, np.full((size, size, 3), 0.25 * (k + 1)), np.eye(size, dtype=bool)) for k, cam in enumerate(cams)
    )
    return SceneBundle(name="tiny", template=single_triangle(), views=views, **kwargs)
