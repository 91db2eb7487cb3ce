"""Landmark reprojection and uniform-Laplacian smoothness losses."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from meshvr.core.camera import Camera, project_points, projection_jacobians
from meshvr.core.errors import SceneValidationError, Violation
from meshvr.core.mesh import TriangleMesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LandmarkSet:
    """2D detections tied to template vertices, one row per (view, vertex)."""

    view_ids: np.ndarray    # (n_l,) int
    vertex_ids: np.ndarray  # (n_l,) int
    pixels: np.ndarray      # (n_l, 2)

    def __post_init__(self) -> None:
        v = np.asarray(self.view_ids, dtype=np.int64).reshape(-1)
        i = np.asarray(self.vertex_ids, dtype=np.int64).reshape(-1)
        p = np.asarray(self.pixels, dtype=np.float64).reshape(-1, 2)
        if not (v.shape[0] == i.shape[0] == p.shape[0]):
            raise ValueError("LandmarkSet: view_ids, vertex_ids and pixels must have equal length")
        object.__setattr__(self, "view_ids", v)
        object.__setattr__(self, "vertex_ids", i)
        object.__setattr__(self, "pixels", p)

    def __len__(self) -> int:
        return int(self.view_ids.shape[0])

    @property
    def views(self) -> list[int]:
        """The front-view subset I_f."""
        return sorted({int(x) for x in self.view_ids})

    def validate(self, n_vertices: int) -> None:
        bad = np.nonzero((self.vertex_ids < 0) | (self.vertex_ids >= n_vertices))[0]
        if bad.size:
            raise SceneValidationError(
                [Violation(f"landmarks[{int(k)}]", f"vertex index {int(self.vertex_ids[k])} out of range") for k in bad[:10]]
            )

    def subset(self, views: set[int]) -> "LandmarkSet":
        keep = np.isin(self.view_ids, sorted(views))
        return LandmarkSet(self.view_ids[keep], self.vertex_ids[keep], self.pixels[keep])


def landmark_loss(
    vertices: Any,
    cameras: Mapping[int, Camera],
    landmarks: LandmarkSet,
) -> tuple[float, np.ndarray]:
    """Sum of squared pixel distances; behind-camera terms are skipped with a warning."""
    verts = np.asarray(vertices, dtype=np.float64)
    grad = np.zeros_like(verts)
    total = 0.0
    for view in landmarks.views:
        if view not in cameras:
            logger.warning("landmark_loss: no camera for view %d, its landmarks are skipped", view)
            continue
        cam = cameras[view]
        rows = np.nonzero(landmarks.view_ids == view)[0]
        vid = landmarks.vertex_ids[rows]
        pts = verts[vid]
        pix, depth = project_points(cam, pts)
        ok = depth > 0.0
        if not ok.all():
            logger.warning(
                "landmark_loss: view %d skips behind-camera landmark vertices %s", view, vid[~ok].tolist()
            )
        if not ok.any():
            continue
        res = pix[ok] - landmarks.pixels[rows[ok]]
        total += float((res * res).sum())
        jac = projection_jacobians(cam, pts[ok])
        np.add.at(grad, vid[ok], 2.0 * np.einsum("nr,nrc->nc", res, jac))
    return total, grad


def laplacian_loss(mesh: TriangleMesh, vertices: Any = None) -> tuple[float, np.ndarray]:
    """sum_i |delta_i|^2 and its vertex gradient 2 L^T (L V)."""
    lap = mesh.laplacian_operator()
    v = mesh.vertices if vertices is None else np.asarray(vertices, dtype=np.float64)
    delta = np.asarray(lap @ v)
    return float((delta * delta).sum()), np.asarray(2.0 * (lap.T @ delta))


__all__ = ["LandmarkSet", "landmark_loss", "laplacian_loss"]
