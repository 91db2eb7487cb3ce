"""Sinusoidal positional encoding of view directions."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class PositionalEncoding:
    """Per component x -> (x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^(L-1) pi x), cos(...))."""

    bands: int = 4

    def __post_init__(self) -> None:
        if self.bands < 0:
            raise ValueError("bands must be >= 0")

    @property
    def dim(self) -> int:
        return 3 * (2 * self.bands + 1)

    def encode(self, dirs: Any) -> np.ndarray:
        x = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        norms = np.linalg.norm(x, axis=1)
        off = np.abs(norms - 1.0) > _UNIT_TOL
        if off.any():
            logger.warning("positional_encoding: normalising %d non-unit view directions", int(off.sum()))
            x = x.copy()
            x[off] /= np.where(norms[off] > 0.0, norms[off], 1.0)[:, None]
        freqs = (2.0 ** np.arange(self.bands)) * np.pi                     # (L,)
        arg = x[:, :, None] * freqs[None, None, :]                          # (N,3,L)
        sc = np.stack([np.sin(arg), np.cos(arg)], axis=3).reshape(x.shape[0], 3, 2 * self.bands)
        return np.concatenate([x[:, :, None], sc], axis=2).reshape(x.shape[0], self.dim)


def positional_encoding(v_c: Any, bands: int = 4) -> np.ndarray:
    v = np.asarray(v_c, dtype=np.float64)
    out = PositionalEncoding(bands).encode(v.reshape(-1, 3))
    return out[0] if v.ndim == 1 else out


__all__ = ["PositionalEncoding", "positional_encoding"]
