"""Pinhole camera model: world->camera (R, t), intrinsics K in pixels.

Pixel coordinates are continuous; pixel (i, j) covers [i, i+1) x [j, j+1)
and its centre is (i + 0.5, j + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from meshvr.core.errors import BehindCameraError, SceneValidationError, Violation

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Camera:
    K: np.ndarray
    R: np.ndarray
    t: np.ndarray
    width: int
    height: int

    def __post_init__(self) -> None:
        K = np.array(self.K, dtype=np.float64).reshape(3, 3)
        R = np.array(self.R, dtype=np.float64).reshape(3, 3)
        t = np.array(self.t, dtype=np.float64).reshape(3)
        violations = validate_camera_arrays(K, R, int(self.width), int(self.height))
        if violations:
            raise SceneValidationError(violations)
        for arr in (K, R, t):
            arr.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def center(self) -> np.ndarray:
        return -self.R.T @ self.t

    @property
    def forward(self) -> np.ndarray:
        """Viewing axis (camera +z) in world coordinates."""
        return self.R[2].copy()

    @property
    def focal(self) -> float:
        return float(0.5 * (self.K[0, 0] + self.K[1, 1]))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "K": [float(x) for x in self.K.ravel()],
            "R": [float(x) for x in self.R.ravel()],
            "t": [float(x) for x in self.t],
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def look_at(
        cls,
        eye: Any,
        target: Any,
        up: Any,
        *,
        focal: float,
        width: int,
        height: int,
    ) -> "Camera":
        """Camera at `eye` looking at `target` (+z forward, +y down in image)."""
        eye = np.asarray(eye, dtype=np.float64)
        fwd = np.asarray(target, dtype=np.float64) - eye
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(up, dtype=np.float64))
        right /= np.linalg.norm(right)
        down = np.cross(fwd, right)
        R = np.stack([right, down, fwd])
        t = -R @ eye
        K = np.array([[focal, 0.0, width / 2.0], [0.0, focal, height / 2.0], [0.0, 0.0, 1.0]])
        return cls(K=K, R=R, t=t, width=width, height=height)


def validate_camera_arrays(K: np.ndarray, R: np.ndarray, width: int, height: int) -> list[Violation]:
    v: list[Violation] = []
    if not (np.isfinite(K).all() and np.isfinite(R).all()):
        v.append(Violation("camera", "contains non-finite values"))
        return v
    if np.abs(R.T @ R - np.eye(3)).max() > _ORTHO_TOL or np.linalg.det(R) <= 0.0:
        v.append(Violation("camera.R", "must be a proper rotation (R^T R = I, det +1)"))
    if abs(K[1, 0]) > 0.0 or abs(K[2, 0]) > 0.0 or abs(K[2, 1]) > 0.0:
        v.append(Violation("camera.K", "must be upper-triangular"))
    if K[0, 0] <= 0.0 or K[1, 1] <= 0.0:
        v.append(Violation("camera.K", "focal entries must be positive"))
    if width < 1 or height < 1:
        v.append(Violation("camera", f"image size must be positive, got {width}x{height}"))
    return v


def generate_rays(camera: Camera, pixels: Any) -> tuple[np.ndarray, np.ndarray]:
    """Rays through sub-pixel coordinates (N,2) as (u, v).

    Returns (origin (3,), unit directions (N,3)).
    """
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    homog = np.concatenate([px, np.ones((px.shape[0], 1))], axis=1)
    cam_dirs = np.linalg.solve(camera.K, homog.T).T
    world = cam_dirs @ camera.R
    world /= np.linalg.norm(world, axis=1, keepdims=True)
    return camera.center, world


def generate_ray(camera: Camera, pixel: Any) -> tuple[np.ndarray, np.ndarray]:
    origin, dirs = generate_rays(camera, np.asarray(pixel, dtype=np.float64)[None, :])
    return origin, dirs[0]


def project_points(camera: Camera, points: Any) -> tuple[np.ndarray, np.ndarray]:
    """Project (N,3) world points; returns (pixels (N,2), depth (N,))."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cam = pts @ camera.R.T + camera.t
    hom = cam @ camera.K.T
    depth = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        pix = hom[:, :2] / hom[:, 2:3]
    return pix, depth


def project_vertex(camera: Camera, v: Any) -> np.ndarray:
    pix, depth = project_points(camera, np.asarray(v, dtype=np.float64)[None, :])
    if depth[0] <= 0.0:
        raise BehindCameraError(f"point {np.asarray(v).tolist()} has non-positive depth {depth[0]:g}")
    return pix[0]


def projection_jacobians(camera: Camera, points: Any) -> np.ndarray:
    """d(pixel)/d(point) for each point, shape (N, 2, 3)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    hom = (pts @ camera.R.T + camera.t) @ camera.K.T
    M = camera.K @ camera.R                                  # d(hom)/d(point)
    w = hom[:, 2]
    jac = np.empty((pts.shape[0], 2, 3), dtype=np.float64)
    for r in range(2):
        jac[:, r, :] = (M[r][None, :] * w[:, None] - hom[:, r:r + 1] * M[2][None, :]) / (w * w)[:, None]
    return jac


__all__ = [
    "Camera",
    "generate_ray",
    "generate_rays",
    "project_points",
    "project_vertex",
    "projection_jacobians",
    "validate_camera_arrays",
]
