"""Mesh-to-reference distance: mean over mesh vertices of the distance to the reference surface.

The metric is one-directional (mesh -> reference). References are analytic
fixture surfaces (ellipsoids exactly, other shapes through a dense
tessellation) or scan meshes (nearest triangle through the octree).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np

from meshvr.bundle.manifest import read_manifest
from meshvr.bundle.mesh_io import read_obj
from meshvr.core.mesh import TriangleMesh
from meshvr.spatial.octree import build
from meshvr.synth.shapes import Ellipsoid, Surface, surface_from_json, tessellate

logger = logging.getLogger(__name__)

Reference = Union[Surface, TriangleMesh]


@dataclass(frozen=True)
class GeometryReport:
    mean_distance: float
    max_distance: float
    distances: np.ndarray  # (n_v,) for every vertex
    included: np.ndarray   # (n_v,) bool

    @property
    def n_included(self) -> int:
        return int(self.included.sum())


def ellipsoid_distance(ellipsoid: Ellipsoid, points: Any, iters: int = 200) -> np.ndarray:
    """Exact unsigned distance to an ellipsoid.

    The closest point is x_i = a_i^2 p_i / (t + a_i^2) with t the root of
    sum_i (a_i p_i / (t + a_i^2))^2 = 1 on t > -min(a)^2, found by bisection.
    """
    a = np.asarray(ellipsoid.axes, dtype=np.float64)
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3) - np.asarray(ellipsoid.center)
    a2 = a * a

    def f(t: np.ndarray) -> np.ndarray:
        return ((a[None, :] * p / (t[:, None] + a2[None, :])) ** 2).sum(axis=1) - 1.0

    n = p.shape[0]
    lo = np.full(n, -a2.min() * (1.0 - 1e-12))
    hi = np.maximum(a.max() * np.linalg.norm(p, axis=1), 0.0) + 1e-12
    # the root sits below lo only for points on the minor-axis plane deep inside
    lo_ok = f(lo) > 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = f(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    t = 0.5 * (lo + hi)
    x = a2[None, :] * p / (t[:, None] + a2[None, :])
    if not lo_ok.all():
        # no root: the closest point leaves the minor-axis plane
        k = int(np.argmin(a))
        others = [i for i in range(3) if i != k]
        q = p[~lo_ok]
        xs = np.zeros_like(q)
        for i in others:
            xs[:, i] = a2[i] * q[:, i] / (a2[i] - a2[k]) if a2[i] > a2[k] else q[:, i]
        rest = 1.0 - sum((xs[:, i] / a[i]) ** 2 for i in others)
        xs[:, k] = a[k] * np.sqrt(np.maximum(rest, 0.0))
        x[~lo_ok] = xs
    return np.linalg.norm(p - x, axis=1)


def mesh_distance(reference: TriangleMesh, points: Any) -> np.ndarray:
    tree = build(reference)
    return tree.nearest_triangles(reference, points).distance


def reference_distance(reference: Reference, points: Any, *, dense_subdivisions: int = 6) -> np.ndarray:
    if isinstance(reference, TriangleMesh):
        return mesh_distance(reference, points)
    if isinstance(reference, Ellipsoid):
        return ellipsoid_distance(reference, points)
    return mesh_distance(tessellate(reference, dense_subdivisions), points)


def load_reference(path: Path) -> Reference:
    """A scan mesh (.obj) or the analytic ground truth recorded in a synthetic scene manifest."""
    p = Path(path)
    if p.suffix.lower() == ".obj":
        return read_obj(p)
    manifest_path = p / "scene.json" if p.is_dir() else p
    if not manifest_path.is_file():
        raise FileNotFoundError(f"reference not found: {p}")
    fixture = read_manifest(manifest_path).get("fixture")
    if not isinstance(fixture, dict) or "surface" not in fixture:
        raise ValueError(f"{manifest_path}: scene carries no analytic ground-truth surface")
    return surface_from_json(fixture["surface"])


def eval_geometry(
    mesh: Union[TriangleMesh, Any],
    reference: Reference,
    *,
    exclude: Optional[Sequence[int]] = None,
    dense_subdivisions: int = 6,
) -> GeometryReport:
    """Mean per-vertex nearest distance from `mesh` to `reference`; `exclude` drops vertex ids from the mean."""
    verts = mesh.vertices if isinstance(mesh, TriangleMesh) else np.asarray(mesh, dtype=np.float64).reshape(-1, 3)
    if verts.shape[0] == 0:
        raise ValueError("eval_geometry: mesh has no vertices")
    dist = reference_distance(reference, verts, dense_subdivisions=dense_subdivisions)
    included = np.ones(verts.shape[0], dtype=bool)
    if exclude is not None:
        ex = np.asarray(list(exclude), dtype=np.int64)
        if ex.size and (ex.min() < 0 or ex.max() >= verts.shape[0]):
            raise ValueError(f"eval_geometry: excluded vertex ids out of range [0, {verts.shape[0]})")
        included[ex] = False
    if not included.any():
        raise ValueError("eval_geometry: every vertex is excluded")
    used = dist[included]
    logger.debug("eval_geometry: %d of %d vertices, mean %.6g", used.size, verts.shape[0], float(used.mean()))
    return GeometryReport(float(used.mean()), float(used.max()), dist, included)


__all__ = [
    "GeometryReport",
    "ellipsoid_distance",
    "eval_geometry",
    "load_reference",
    "mesh_distance",
    "reference_distance",
]
