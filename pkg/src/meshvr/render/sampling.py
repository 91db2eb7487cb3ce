"""Pixel grid sampling and stratified sampling inside active ray intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.default_rng(0)
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(int(seed))
    return np.random.default_rng([int(x) for x in seed])


def sample_grid_pixels(
    width: int,
    height: int,
    stride: int,
    jitter_amplitude: float,
    seed: SeedLike = 0,
) -> np.ndarray:
    """One sub-pixel sample per full stride x stride cell, row-major, shape (N, 2) as (u, v).

    Samples sit at the cell centre plus uniform jitter in [-amp, amp] per axis.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if not 0.0 <= jitter_amplitude < stride / 2.0:
        raise ValueError(f"jitter_amplitude must lie in [0, stride/2), got {jitter_amplitude}")
    nx = max(width // stride, 1 if width >= 1 else 0)
    ny = max(height // stride, 1 if height >= 1 else 0)
    cx = np.arange(nx) * stride + stride / 2.0
    cy = np.arange(ny) * stride + stride / 2.0
    vv, uu = np.meshgrid(cy, cx, indexing="ij")
    px = np.stack([uu.ravel(), vv.ravel()], axis=1)
    if jitter_amplitude > 0.0:
        rng = make_rng(seed)
        px = px + rng.uniform(-jitter_amplitude, jitter_amplitude, size=px.shape)
    return px


def pixel_centers(width: int, height: int) -> np.ndarray:
    return sample_grid_pixels(width, height, 1, 0.0)


def pixel_indices(pixels: np.ndarray, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Nearest pixel (row, col) of sub-pixel coordinates: floor, clamped to the image."""
    col = np.clip(np.floor(pixels[:, 0]).astype(np.int64), 0, width - 1)
    row = np.clip(np.floor(pixels[:, 1]).astype(np.int64), 0, height - 1)
    return row, col


def allocate_samples(lengths: np.ndarray, n_samples: int) -> np.ndarray:
    """Split n_samples across intervals proportionally to length (largest remainder, ties to lower index)."""
    lengths = np.asarray(lengths, dtype=np.float64)
    total = float(lengths.sum())
    if lengths.size == 0:
        return np.zeros(0, dtype=np.int64)
    if total <= 0.0:
        counts = np.zeros(lengths.size, dtype=np.int64)
        counts[0] = n_samples
        return counts
    raw = n_samples * lengths / total
    counts = np.floor(raw).astype(np.int64)
    rest = n_samples - int(counts.sum())
    if rest > 0:
        order = np.lexsort((np.arange(lengths.size), -(raw - counts)))
        counts[order[:rest]] += 1
    return counts


@dataclass(frozen=True)
class RaySamples:
    t: np.ndarray            # (n,) strictly increasing
    interval_id: np.ndarray  # (n,) index of the containing interval

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def pair_mask(self) -> np.ndarray:
        """Consecutive samples in the same interval."""
        return self.interval_id[1:] == self.interval_id[:-1]


def sample_intervals(
    intervals: np.ndarray,
    n_samples: int,
    rng: Optional[np.random.Generator] = None,
) -> RaySamples:
    """Stratified t values inside intervals (k, 2); jitter off when rng is None (stratum midpoints)."""
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    iv = np.asarray(intervals, dtype=np.float64).reshape(-1, 2)
    # zero-length intervals would repeat t values
    iv = iv[iv[:, 1] > iv[:, 0]]
    if iv.shape[0] == 0:
        return RaySamples(np.zeros(0), np.zeros(0, dtype=np.int64))
    lengths = iv[:, 1] - iv[:, 0]
    counts = allocate_samples(lengths, n_samples)
    ids = np.repeat(np.arange(iv.shape[0]), counts)
    j = np.concatenate([np.arange(c) for c in counts]).astype(np.float64)
    m = counts[ids].astype(np.float64)
    u = np.full(ids.shape[0], 0.5) if rng is None else rng.uniform(0.0, 1.0, size=ids.shape[0])
    t = iv[ids, 0] + (j + u) / m * lengths[ids]
    return RaySamples(t, ids.astype(np.int64))


def sample_along_ray(
    intervals: np.ndarray,
    n_samples: int,
    seed: SeedLike = None,
) -> RaySamples:
    rng = None if seed is None else make_rng(seed)
    return sample_intervals(intervals, n_samples, rng)


__all__ = [
    "RaySamples",
    "allocate_samples",
    "make_rng",
    "pixel_centers",
    "pixel_indices",
    "sample_along_ray",
    "sample_grid_pixels",
    "sample_intervals",
]
