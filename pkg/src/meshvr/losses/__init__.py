"""Training losses; every function returns (value, gradient)."""

from __future__ import annotations

from meshvr.core.camera import project_vertex

from .geometric import LandmarkSet, landmark_loss, laplacian_loss
from .photometric import color_l1, tv_cell_count, tv_loss
from .silhouette import mask_boundary, mask_contour_band, mask_loss, scaled_band_radius
from .total import STAGE_COMPONENTS, LossReport, LossWeights, stage_coefficients, total_loss

__all__ = [
    "LandmarkSet",
    "LossReport",
    "LossWeights",
    "STAGE_COMPONENTS",
    "color_l1",
    "landmark_loss",
    "laplacian_loss",
    "mask_boundary",
    "mask_contour_band",
    "mask_loss",
    "project_vertex",
    "scaled_band_radius",
    "stage_coefficients",
    "tv_cell_count",
    "tv_loss",
    "total_loss",
]
