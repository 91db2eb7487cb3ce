"""Differentiable mesh volume rendering."""

from __future__ import annotations

from .composite import composite, composite_batch
from .density import DensityMapping, alpha_from_distances
from .model import RenderModel
from .renderer import (
    PixelRender,
    RayBatchRender,
    RenderSettings,
    SamplePoint,
    ray_sample_points,
    record_render,
    render_image,
    render_pixel,
    render_rays,
    render_view,
)
from .sampling import sample_along_ray, sample_grid_pixels

__all__ = [
    "DensityMapping",
    "PixelRender",
    "RayBatchRender",
    "RenderModel",
    "RenderSettings",
    "SamplePoint",
    "alpha_from_distances",
    "composite",
    "composite_batch",
    "ray_sample_points",
    "record_render",
    "render_image",
    "render_pixel",
    "render_rays",
    "render_view",
    "sample_along_ray",
    "sample_grid_pixels",
]
