"""Analytic ray-march renderer for ground-truth imagery.

Works directly on the implicit surface and its procedural texture; nothing
here goes through the mesh renderer, so its images can serve as an oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from meshvr.core.camera import Camera

from .shapes import Surface, implicit

logger = logging.getLogger(__name__)

_RAY_CHUNK = 4096


@dataclass(frozen=True)
class ProceduralTexture:
    """Low-frequency colour field c(p) = clip(base + amp * sin(freq * p @ W + phase)).

    kind "constant" returns `base` everywhere.
    """

    kind: str = "waves"
    base: tuple[float, float, float] = (0.55, 0.45, 0.40)
    amplitude: float = 0.3
    frequency: float = 1.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("waves", "constant"):
            raise ValueError(f"texture kind must be 'waves' or 'constant', got {self.kind!r}")

    def _basis(self) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng([self.seed, 0x7E7])
        w = rng.normal(size=(3, 3))
        w /= np.linalg.norm(w, axis=0, keepdims=True)
        return w, rng.uniform(0.0, 2.0 * np.pi, size=3)

    def color(self, points: Any) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        base = np.asarray(self.base, dtype=np.float64)
        if self.kind == "constant":
            return np.repeat(base[None, :], p.shape[0], axis=0)
        w, phase = self._basis()
        return np.clip(base + self.amplitude * np.sin(self.frequency * (p @ w) + phase), 0.02, 0.98)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "base": list(self.base), "amplitude": self.amplitude,
                "frequency": self.frequency, "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ProceduralTexture":
        return cls(kind=str(obj["kind"]), base=tuple(obj["base"]), amplitude=float(obj["amplitude"]),
                   frequency=float(obj["frequency"]), seed=int(obj["seed"]))


def camera_rays(camera: Camera, pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """origin (3,), unit directions d = normalize(R^T K^-1 [u, v, 1])."""
    kinv = np.linalg.inv(camera.K)
    hom = np.concatenate([pixels, np.ones((pixels.shape[0], 1))], axis=1)
    d = (hom @ kinv.T) @ camera.R
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return -camera.R.T @ camera.t, d


def march_rays(
    surface: Surface,
    origin: np.ndarray,
    dirs: np.ndarray,
    *,
    n_steps: int = 256,
    bisect_iters: int = 48,
) -> tuple[np.ndarray, np.ndarray]:
    """First surface crossing per ray: (hit (N,), t (N,) with inf on a miss).

    Uniform steps across the bounding sphere find the first outside->inside
    sign change, bisection refines it.
    """
    o = np.asarray(origin, dtype=np.float64) - np.asarray(surface.center)
    d = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    radius = surface.bounding_radius * 1.01
    b = d @ o
    disc = b * b - (o @ o - radius * radius)
    hit = np.zeros(d.shape[0], dtype=bool)
    t_hit = np.full(d.shape[0], np.inf)
    rows = np.nonzero(disc > 0.0)[0]
    for s in range(0, rows.size, _RAY_CHUNK):
        r = rows[s:s + _RAY_CHUNK]
        sq = np.sqrt(disc[r])
        t0 = np.maximum(-b[r] - sq, 0.0)
        t1 = -b[r] + sq
        steps = np.linspace(0.0, 1.0, n_steps + 1)
        ts = t0[:, None] + (t1 - t0)[:, None] * steps[None, :]
        pts = origin[None, None, :] + ts[:, :, None] * d[r][:, None, :]
        f = implicit(surface, pts.reshape(-1, 3)).reshape(ts.shape)
        inside = f <= 0.0
        first = np.argmax(inside, axis=1)
        found = inside.any(axis=1) & (first > 0)
        if not found.any():
            continue
        k = first[found]
        rr = np.nonzero(found)[0]
        lo = ts[rr, k - 1]
        hi = ts[rr, k]
        dd = d[r][rr]
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            inside_mid = implicit(surface, origin[None, :] + mid[:, None] * dd) <= 0.0
            hi = np.where(inside_mid, mid, hi)
            lo = np.where(inside_mid, lo, mid)
        hit[r[rr]] = True
        t_hit[r[rr]] = hi
    return hit, t_hit


def render_oracle_view(
    surface: Surface,
    texture: ProceduralTexture,
    camera: Camera,
    *,
    background: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(image (H,W,3), mask (H,W) in {0,1}, depth along the ray (H,W), inf on a miss) at pixel centres."""
    h, w = camera.height, camera.width
    jj, ii = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    px = np.stack([ii.ravel(), jj.ravel()], axis=1)
    origin, dirs = camera_rays(camera, px)
    hit, t = march_rays(surface, origin, dirs)
    image = np.repeat(np.asarray(background, dtype=np.float64)[None, :], px.shape[0], axis=0)
    if hit.any():
        pts = origin[None, :] + t[hit, None] * dirs[hit]
        image[hit] = texture.color(pts)
    logger.debug("oracle view %dx%d: %d foreground pixels", w, h, int(hit.sum()))
    return image.reshape(h, w, 3), hit.reshape(h, w).astype(np.float64), t.reshape(h, w)


__all__ = ["ProceduralTexture", "camera_rays", "march_rays", "render_oracle_view"]
