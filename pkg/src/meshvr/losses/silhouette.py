"""Mask-contour band and the opacity (mask) loss evaluated on it."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
from scipy import ndimage

from meshvr.core.errors import NoValidPixelsError

logger = logging.getLogger(__name__)

_EIGHT = np.ones((3, 3), dtype=bool)


def mask_boundary(mask: Any) -> np.ndarray:
    """Foreground pixels with at least one 8-connected background neighbour."""
    m = np.asarray(mask) > 0.5
    return m & ~ndimage.binary_erosion(m, structure=_EIGHT, border_value=1)


def mask_contour_band(mask: Any, radius: int = 8) -> np.ndarray:
    """Boolean (H, W) band: pixels within Chebyshev distance `radius` of the contour."""
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    edge = mask_boundary(mask)
    if not edge.any():
        logger.warning("mask_contour_band: mask has no contour, band is empty")
        return np.zeros_like(edge)
    size = 2 * radius + 1
    return ndimage.binary_dilation(edge, structure=np.ones((size, size), dtype=bool))


def scaled_band_radius(radius: int, height: int, width: int, reference: int = 1024) -> int:
    """Band radius for an image, scaled from one defined at `reference` pixels on the long side."""
    return max(1, int(round(radius * max(height, width) / reference)))


def mask_loss(opacity: Any, mask_values: Any, culled: Any = None) -> tuple[float, np.ndarray]:
    """Mean (M - O)^2 over band pixels; culled pixels count with O = 0 and get no gradient."""
    o = np.asarray(opacity, dtype=np.float64).reshape(-1)
    m = np.asarray(mask_values, dtype=np.float64).reshape(-1)
    if o.shape != m.shape:
        raise ValueError(f"mask_loss: {o.shape[0]} opacities for {m.shape[0]} mask values")
    if o.size == 0:
        raise NoValidPixelsError("mask_loss: contour band is empty")
    c = np.zeros(o.shape, dtype=bool) if culled is None else np.asarray(culled, dtype=bool).reshape(-1)
    eff = np.where(c, 0.0, o)
    res = m - eff
    loss = float((res * res).mean())
    grad = np.where(c, 0.0, -2.0 * res / o.size)
    return loss, grad


__all__ = ["mask_boundary", "mask_contour_band", "mask_loss", "scaled_band_radius"]
