"""meshvr core: mesh, camera and validation primitives.

This package is standalone and must not import render/train/bundle/cli to
avoid circular dependencies.
"""

from __future__ import annotations

from .camera import Camera, generate_ray, generate_rays, project_points, project_vertex, projection_jacobians
from .errors import (
    BehindCameraError,
    DegenerateTriangleError,
    EmptyMeshError,
    SceneValidationError,
    StaleIndexError,
    Violation,
)
from .mesh import (
    ClosestPointBatch,
    ClosestPointResult,
    TriangleMesh,
    closest_point_jacobians,
    closest_point_on_triangle,
    face_normal,
    laplacian_deltas,
    pseudo_normal,
    signed_distance,
    signed_distances,
)

__all__ = [
    "BehindCameraError",
    "Camera",
    "ClosestPointBatch",
    "ClosestPointResult",
    "DegenerateTriangleError",
    "EmptyMeshError",
    "SceneValidationError",
    "StaleIndexError",
    "TriangleMesh",
    "Violation",
    "closest_point_jacobians",
    "closest_point_on_triangle",
    "face_normal",
    "generate_ray",
    "generate_rays",
    "laplacian_deltas",
    "project_points",
    "project_vertex",
    "projection_jacobians",
    "pseudo_normal",
    "signed_distance",
    "signed_distances",
]
