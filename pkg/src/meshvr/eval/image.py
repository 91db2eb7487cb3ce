"""Image-quality metrics on linear [0, 1] images (peak 1.0)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from meshvr.core.errors import NoValidPixelsError, ShapeMismatchError

SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5  # radius int(3.5 * 1.5 + 0.5) = 5 -> 11x11 window
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class RenderReport:
    psnr: float
    ssim: float
    n_pixels: int


def _prepare(rendered: Any, reference: Any, mask: Any) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(rendered, dtype=np.float64)
    y = np.asarray(reference, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"rendered {x.shape} and reference {y.shape} differ")
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    m = np.ones(x.shape[:2], dtype=bool) if mask is None else np.asarray(mask) > 0.5
    if m.shape != x.shape[:2]:
        raise ShapeMismatchError(f"mask {m.shape} does not match image {x.shape[:2]}")
    if not m.any():
        raise NoValidPixelsError("image metric: mask selects no pixel")
    return x, y, m


def psnr(rendered: Any, reference: Any, mask: Any = None) -> float:
    """10 log10(1 / MSE) over masked pixels; +inf when the images agree exactly."""
    x, y, m = _prepare(rendered, reference, mask)
    mse = float(((x - y)[m] ** 2).mean())
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def ssim_map(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-pixel SSIM of two single-channel images with a Gaussian window."""
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    def blur(a: np.ndarray) -> np.ndarray:
        return gaussian_filter(a, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE)

    mu_x = blur(x)
    mu_y = blur(y)
    sxx = blur(x * x) - mu_x * mu_x
    syy = blur(y * y) - mu_y * mu_y
    sxy = blur(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return num / den


def ssim(rendered: Any, reference: Any, mask: Any = None) -> float:
    """Mean SSIM over masked pixels, averaged over channels."""
    x, y, m = _prepare(rendered, reference, mask)
    vals = [float(ssim_map(x[:, :, c], y[:, :, c])[m].mean()) for c in range(x.shape[2])]
    return float(np.mean(vals))


def eval_render(rendered: Any, reference: Any, mask: Optional[Any] = None) -> RenderReport:
    _, _, m = _prepare(rendered, reference, mask)
    return RenderReport(psnr(rendered, reference, mask), ssim(rendered, reference, mask), int(m.sum()))


__all__ = ["RenderReport", "eval_render", "psnr", "ssim", "ssim_map"]
