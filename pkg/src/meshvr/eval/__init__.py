"""Evaluation metrics: geometry error and image quality."""

from __future__ import annotations

from .geometry import GeometryReport, ellipsoid_distance, eval_geometry, load_reference, reference_distance
from .image import RenderReport, eval_render, psnr, ssim

__all__ = [
    "GeometryReport",
    "RenderReport",
    "ellipsoid_distance",
    "eval_geometry",
    "eval_render",
    "load_reference",
    "psnr",
    "reference_distance",
    "ssim",
]
