"""Exact triangle / axis-aligned box overlap (separating axis theorem).

Akenine-Moller's 13-axis test, vectorised over many triangles against one
box. Touching counts as overlapping.
"""

from __future__ import annotations

import numpy as np

_EYE = np.eye(3)


def triangles_overlap_box(
    tris: np.ndarray,
    box_min: np.ndarray,
    box_max: np.ndarray,
    *,
    tol: float = 1e-12,
) -> np.ndarray:
    """Boolean mask (M,) of triangles (M,3,3) that intersect the closed box."""
    tris = np.asarray(tris, dtype=np.float64)
    if tris.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    center = 0.5 * (np.asarray(box_min) + np.asarray(box_max))
    half = 0.5 * (np.asarray(box_max) - np.asarray(box_min))
    v = tris - center[None, None, :]                              # (M,3,3)
    slack = tol * (1.0 + float(np.abs(half).max()))

    # box face normals: plain AABB test
    ok = ((v.min(axis=1) <= half + slack) & (v.max(axis=1) >= -half - slack)).all(axis=1)

    # triangle plane
    normal = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    r = np.abs(normal) @ half
    s = np.einsum("ij,ij->i", normal, v[:, 0])
    ok &= np.abs(s) <= r + slack * (1.0 + np.linalg.norm(normal, axis=1))

    # nine edge x box-axis cross products
    edges = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)   # (M,3,3)
    for i in range(3):
        axes = np.cross(edges[:, i, None, :], _EYE[None, :, :])                           # (M,3,3)
        proj = np.einsum("mak,mvk->mav", axes, v)                                          # (M,3 axes,3 verts)
        rad = np.abs(axes) @ half                                                           # (M,3)
        scale = 1.0 + np.linalg.norm(axes, axis=2)
        ok &= (proj.min(axis=2) <= rad + slack * scale).all(axis=1)
        ok &= (proj.max(axis=2) >= -rad - slack * scale).all(axis=1)
    return ok


def point_box_distance(points: np.ndarray, box_min: np.ndarray, box_max: np.ndarray) -> np.ndarray:
    """Euclidean distance from points (N,3) to boxes (N,3)/(N,3) (0 inside)."""
    gap = np.maximum(np.maximum(box_min - points, 0.0), points - box_max)
    return np.linalg.norm(gap, axis=1)


def ray_box_slabs(
    origin: np.ndarray,
    dirs: np.ndarray,
    box_min: np.ndarray,
    box_max: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Slab intersection of R rays (shared origin) with B boxes.

    Returns (t_near, t_far) each (R, B); a miss has t_near > t_far.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(dirs, dtype=np.float64)                       # (R,3)
    lo = box_min[None, :, :] - o[None, None, :]                  # (1,B,3)
    hi = box_max[None, :, :] - o[None, None, :]
    dd = d[:, None, :]                                           # (R,1,3)
    parallel = dd == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = lo / dd
        t2 = hi / dd
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    inside_slab = (lo <= 0.0) & (hi >= 0.0)                       # origin coordinate within the slab
    tmin = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), tmax)
    return tmin.max(axis=2), tmax.min(axis=2)


__all__ = ["point_box_distance", "ray_box_slabs", "triangles_overlap_box"]
