"""Colour (L1) and tri-plane total-variation losses."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from meshvr.core.errors import NoValidPixelsError


def color_l1(rendered: Any, observed: Any, valid: Any) -> tuple[float, np.ndarray]:
    """Mean |rendered - observed| over valid pixels and channels; returns (loss, dL/drendered)."""
    r = np.asarray(rendered, dtype=np.float64)
    o = np.asarray(observed, dtype=np.float64)
    if r.shape != o.shape:
        raise ValueError(f"color_l1: rendered {r.shape} vs observed {o.shape}")
    r2 = r.reshape(r.shape[0], -1)
    o2 = o.reshape(o.shape[0], -1)
    m = np.asarray(valid, dtype=bool).reshape(-1)
    count = int(m.sum()) * r2.shape[1]
    if count == 0:
        raise NoValidPixelsError("color_l1: no valid pixels")
    diff = (r2 - o2) * m[:, None]
    loss = float(np.abs(diff).sum() / count)
    grad = np.sign(diff) / count
    return loss, grad.reshape(r.shape)


def tv_loss(planes: Sequence[np.ndarray]) -> tuple[float, list[np.ndarray]]:
    """Sum over planes and cells with both forward neighbours of sqrt(sum_c du^2 + dv^2).

    Each plane is (H, W) or (H, W, C). Returns (loss, per-plane gradients);
    cells with zero variation contribute a zero subgradient.
    """
    total = 0.0
    grads: list[np.ndarray] = []
    for plane in planes:
        p = np.asarray(plane, dtype=np.float64)
        p3 = p[..., None] if p.ndim == 2 else p
        g = np.zeros_like(p3)
        if p3.shape[0] >= 2 and p3.shape[1] >= 2:
            base = p3[:-1, :-1]
            du = p3[1:, :-1] - base
            dv = p3[:-1, 1:] - base
            norm = np.sqrt((du * du + dv * dv).sum(axis=2))
            total += float(norm.sum())
            inv = np.divide(1.0, norm, out=np.zeros_like(norm), where=norm > 0.0)[..., None]
            gu = du * inv
            gv = dv * inv
            g[1:, :-1] += gu
            g[:-1, 1:] += gv
            g[:-1, :-1] -= gu + gv
        grads.append(g.reshape(p.shape))
    return total, grads


def tv_cell_count(planes: Sequence[np.ndarray]) -> int:
    return int(sum(max(p.shape[0] - 1, 0) * max(p.shape[1] - 1, 0) for p in planes))


__all__ = ["color_l1", "tv_cell_count", "tv_loss"]
