"""Front-to-back alpha compositing along rays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np


@dataclass(frozen=True)
class CompositeResult:
    color: np.ndarray         # (..., 3)
    opacity: np.ndarray       # (...,)
    weights: np.ndarray       # (..., n)
    transmittance: np.ndarray  # (..., n) before each sample


def composite_batch(
    alphas: np.ndarray,
    colors: np.ndarray,
    background: Optional[np.ndarray] = None,
) -> CompositeResult:
    """alphas (..., n), colors (..., n, 3).

    C = sum_k w_k c_k (+ (1 - O) * background when given), O = sum_k w_k,
    w_k = T_k alpha_k, T_k = prod_{j<k} (1 - alpha_j).
    """
    a = np.asarray(alphas, dtype=np.float64)
    c = np.asarray(colors, dtype=np.float64)
    if a.shape[-1] == 0:
        zeros = np.zeros(a.shape[:-1])
        color = np.zeros(a.shape[:-1] + (3,))
        if background is not None:
            color = color + np.asarray(background, dtype=np.float64)
        return CompositeResult(color, zeros, a.copy(), a.copy())
    one_minus = 1.0 - a
    trans = np.concatenate([np.ones(a.shape[:-1] + (1,)), np.cumprod(one_minus, axis=-1)[..., :-1]], axis=-1)
    w = trans * a
    opacity = w.sum(axis=-1)
    color = np.einsum("...k,...kc->...c", w, c)
    if background is not None:
        color = color + (1.0 - opacity)[..., None] * np.asarray(background, dtype=np.float64)
    return CompositeResult(color, opacity, w, trans)


def composite_batch_vjp(
    result: CompositeResult,
    alphas: np.ndarray,
    colors: np.ndarray,
    grad_color: np.ndarray,
    grad_opacity: np.ndarray,
    background: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (dL/dalpha (..., n), dL/dcolors (..., n, 3)).

    Uses the suffix recursion S_k = a_k g_k + (1 - a_k) S_{k+1} with
    dL/da_k = T_k (g_k - S_{k+1}); no division by (1 - a).
    """
    a = np.asarray(alphas, dtype=np.float64)
    c = np.asarray(colors, dtype=np.float64)
    gc = np.asarray(grad_color, dtype=np.float64)
    go = np.asarray(grad_opacity, dtype=np.float64)
    if background is not None:
        go = go - gc @ np.asarray(background, dtype=np.float64)
    g_w = np.einsum("...c,...kc->...k", gc, c) + go[..., None]
    n = a.shape[-1]
    grad_alpha = np.empty_like(a)
    suffix = np.zeros(a.shape[:-1])
    for k in range(n - 1, -1, -1):
        grad_alpha[..., k] = result.transmittance[..., k] * (g_w[..., k] - suffix)
        suffix = a[..., k] * g_w[..., k] + (1.0 - a[..., k]) * suffix
    grad_colors = result.weights[..., None] * gc[..., None, :]
    return grad_alpha, grad_colors


def composite(alphas: Any, colors: Any) -> tuple[np.ndarray, float, np.ndarray]:
    """Single ray: (C, O, weights) for n alphas and (n, 3) colours (grayscale (n,) allowed)."""
    a = np.asarray(alphas, dtype=np.float64).reshape(-1)
    c = np.asarray(colors, dtype=np.float64)
    gray = c.ndim == 1
    c3 = np.repeat(c[:, None], 3, axis=1) if gray else c.reshape(-1, 3)
    res = composite_batch(a, c3)
    color = res.color[0] if gray else res.color
    return np.asarray(color), float(res.opacity), res.weights


__all__ = ["CompositeResult", "composite", "composite_batch", "composite_batch_vjp"]
