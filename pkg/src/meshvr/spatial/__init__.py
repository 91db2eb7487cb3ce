"""Spatial acceleration over mesh triangles (octree)."""

from __future__ import annotations

from .octree import Octree, OctreeParams, brute_force_nearest, build, nearest_triangle, ray_active_intervals

__all__ = [
    "Octree",
    "OctreeParams",
    "brute_force_nearest",
    "build",
    "nearest_triangle",
    "ray_active_intervals",
]
