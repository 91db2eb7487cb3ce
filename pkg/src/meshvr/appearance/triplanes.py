"""Tri-plane feature grids with bilinear sampling.

Three axis-aligned planes (xy, xz, yz), each an (n_f, n_f, n_d) grid whose
node (i, j) sits at the world coordinates lo + (i, j) * cell. Features of a
point are the bilinear samples on each plane concatenated in xy, xz, yz order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import scipy.sparse as sp

PLANE_NAMES = ("xy", "xz", "yz")
PLANE_AXES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


@dataclass
class TriPlanes:
    xy: np.ndarray
    xz: np.ndarray
    yz: np.ndarray
    bounds_min: np.ndarray
    bounds_max: np.ndarray

    def __post_init__(self) -> None:
        self.bounds_min = np.asarray(self.bounds_min, dtype=np.float64).reshape(3)
        self.bounds_max = np.asarray(self.bounds_max, dtype=np.float64).reshape(3)
        if not (self.bounds_max > self.bounds_min).all():
            raise ValueError("TriPlanes: bounds_max must exceed bounds_min on every axis")
        res = {p.shape[0] for p in self.planes()} | {p.shape[1] for p in self.planes()}
        if len(res) != 1:
            raise ValueError(f"TriPlanes: all planes must share one square resolution, got {sorted(res)}")
        if self.resolution < 2:
            raise ValueError("TriPlanes: resolution must be >= 2")

    @classmethod
    def create(
        cls,
        bounds_min: Any,
        bounds_max: Any,
        *,
        resolution: int = 64,
        dims: tuple[int, int, int] = (32, 16, 16),
        init_scale: float = 1e-2,
        rng: Optional[np.random.Generator] = None,
    ) -> "TriPlanes":
        rng = rng or np.random.default_rng(0)
        planes = [rng.uniform(-init_scale, init_scale, size=(resolution, resolution, d)) for d in dims]
        return cls(planes[0], planes[1], planes[2], np.asarray(bounds_min), np.asarray(bounds_max))

    @classmethod
    def enclosing(
        cls,
        lo: Any,
        hi: Any,
        *,
        margin: float = 0.1,
        **kwargs: Any,
    ) -> "TriPlanes":
        """Planes whose bounds enclose [lo, hi] with a relative margin per axis."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        ext = np.maximum(hi - lo, 1e-6)
        pad = margin * ext.max()
        return cls.create(lo - pad, hi + pad, **kwargs)

    @property
    def resolution(self) -> int:
        return int(self.xy.shape[0])

    @property
    def dims(self) -> tuple[int, int, int]:
        return (int(self.xy.shape[2]), int(self.xz.shape[2]), int(self.yz.shape[2]))

    @property
    def feature_dim(self) -> int:
        return sum(self.dims)

    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.xy, self.xz, self.yz)

    def plane(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass(frozen=True)
class PlaneLookup:
    i0: np.ndarray     # (N,) lower node index along the plane's first axis
    j0: np.ndarray     # (N,)
    fu: np.ndarray     # (N,) fractional offsets in [0,1]
    fv: np.ndarray
    inside: np.ndarray  # (N,) bool: coordinate was not clamped on either axis


@dataclass(frozen=True)
class TriplaneSample:
    features: np.ndarray                  # (N, feature_dim)
    lookups: dict[str, PlaneLookup]
    clamped: np.ndarray                   # (N,) bool


def _grid_coords(planes: TriPlanes, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = planes.resolution
    g = (points - planes.bounds_min) / (planes.bounds_max - planes.bounds_min) * (n - 1)
    inside = (g >= 0.0) & (g <= n - 1)
    return np.clip(g, 0.0, n - 1), inside


def _lookup(g: np.ndarray, inside: np.ndarray, axes: tuple[int, int], n: int) -> PlaneLookup:
    gu, gv = g[:, axes[0]], g[:, axes[1]]
    i0 = np.minimum(np.floor(gu).astype(np.int64), n - 2)
    j0 = np.minimum(np.floor(gv).astype(np.int64), n - 2)
    return PlaneLookup(i0=i0, j0=j0, fu=gu - i0, fv=gv - j0, inside=inside[:, axes[0]] & inside[:, axes[1]])


def _bilinear(grid: np.ndarray, lk: PlaneLookup) -> np.ndarray:
    fu = lk.fu[:, None]
    fv = lk.fv[:, None]
    return (
        (1 - fu) * (1 - fv) * grid[lk.i0, lk.j0]
        + fu * (1 - fv) * grid[lk.i0 + 1, lk.j0]
        + (1 - fu) * fv * grid[lk.i0, lk.j0 + 1]
        + fu * fv * grid[lk.i0 + 1, lk.j0 + 1]
    )


def sample_triplanes(planes: TriPlanes, points: Any) -> TriplaneSample:
    """Features t(p) for (N,3) points; out-of-bounds points are clamped and flagged."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    g, inside = _grid_coords(planes, pts)
    n = planes.resolution
    lookups = {name: _lookup(g, inside, PLANE_AXES[name], n) for name in PLANE_NAMES}
    feats = [_bilinear(planes.plane(name), lookups[name]) for name in PLANE_NAMES]
    return TriplaneSample(
        features=np.concatenate(feats, axis=1),
        lookups=lookups,
        clamped=~inside.all(axis=1),
    )


def _scatter_matrix(lk: PlaneLookup, n: int) -> sp.csr_matrix:
    """Sparse (n*n, N) matrix of bilinear weights; row = flattened grid node."""
    m = lk.i0.shape[0]
    cols = np.tile(np.arange(m), 4)
    rows = np.concatenate([
        lk.i0 * n + lk.j0,
        (lk.i0 + 1) * n + lk.j0,
        lk.i0 * n + lk.j0 + 1,
        (lk.i0 + 1) * n + lk.j0 + 1,
    ])
    vals = np.concatenate([
        (1 - lk.fu) * (1 - lk.fv),
        lk.fu * (1 - lk.fv),
        (1 - lk.fu) * lk.fv,
        lk.fu * lk.fv,
    ])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, m))


def triplanes_feature_vjp(planes: TriPlanes, sample: TriplaneSample, grad_features: np.ndarray) -> dict[str, np.ndarray]:
    """Scatter dL/dt(p) into per-plane gradients (same shapes as the planes)."""
    n = planes.resolution
    out: dict[str, np.ndarray] = {}
    start = 0
    for name in PLANE_NAMES:
        grid = planes.plane(name)
        d = grid.shape[2]
        g = grad_features[:, start:start + d]
        start += d
        lk = sample.lookups[name]
        out[name] = (_scatter_matrix(lk, n) @ g).reshape(grid.shape)
    return out


def triplanes_point_vjp(planes: TriPlanes, sample: TriplaneSample, grad_features: np.ndarray) -> np.ndarray:
    """dL/dp for the sampled points (zero along clamped axes)."""
    n = planes.resolution
    scale = (n - 1) / (planes.bounds_max - planes.bounds_min)
    pts_grad = np.zeros((grad_features.shape[0], 3), dtype=np.float64)
    start = 0
    for name in PLANE_NAMES:
        grid = planes.plane(name)
        d = grid.shape[2]
        g = grad_features[:, start:start + d]
        start += d
        lk = sample.lookups[name]
        fu = lk.fu[:, None]
        fv = lk.fv[:, None]
        t00 = grid[lk.i0, lk.j0]
        t10 = grid[lk.i0 + 1, lk.j0]
        t01 = grid[lk.i0, lk.j0 + 1]
        t11 = grid[lk.i0 + 1, lk.j0 + 1]
        d_fu = (1 - fv) * (t10 - t00) + fv * (t11 - t01)
        d_fv = (1 - fu) * (t01 - t00) + fu * (t11 - t10)
        au, av = PLANE_AXES[name]
        pts_grad[:, au] += np.einsum("nc,nc->n", g, d_fu) * scale[au] * lk.inside
        pts_grad[:, av] += np.einsum("nc,nc->n", g, d_fv) * scale[av] * lk.inside
    return pts_grad


__all__ = [
    "PLANE_NAMES",
    "TriPlanes",
    "TriplaneSample",
    "sample_triplanes",
    "triplanes_feature_vjp",
    "triplanes_point_vjp",
]
