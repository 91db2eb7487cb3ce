"""Synthetic fixtures with analytic ground truth."""

from __future__ import annotations

from .fixture import SyntheticParams, build_synthetic_scene, camera_ring, ground_truth_surface, synth_scene
from .oracle import ProceduralTexture, march_rays, render_oracle_view
from .shapes import Ellipsoid, TwoLobeBlob, icosphere, sphere, surface_from_json, tessellate

__all__ = [
    "Ellipsoid",
    "ProceduralTexture",
    "SyntheticParams",
    "TwoLobeBlob",
    "build_synthetic_scene",
    "camera_ring",
    "ground_truth_surface",
    "icosphere",
    "march_rays",
    "render_oracle_view",
    "sphere",
    "surface_from_json",
    "synth_scene",
    "tessellate",
]
