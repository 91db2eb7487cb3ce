"""Synthetic scenes: template icosphere, analytic ground truth, camera ring, landmarks."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from meshvr.bundle.scene import FRONTAL_AXIS, SceneBundle, View, load_scene, save_scene
from meshvr.core.camera import Camera, project_points
from meshvr.losses.geometric import LandmarkSet

from .oracle import ProceduralTexture, camera_rays, march_rays, render_oracle_view
from .shapes import Ellipsoid, Surface, TwoLobeBlob, icosphere, sphere, surface_normals, surface_points, tessellate

logger = logging.getLogger(__name__)

SHAPES = ("sphere", "ellipsoid", "blob")


@dataclass(frozen=True)
class SyntheticParams:
    name: str = "synthetic"
    shape: str = "ellipsoid"
    axes: tuple[float, float, float] = (1.15, 0.95, 0.85)
    sphere_radius: float = 1.0
    subdivisions: int = 3
    template_radius: float = 1.0
    n_views: int = 12
    width: int = 128
    height: int = 128
    distance: float = 3.5
    elevation_deg: float = 15.0
    fov_margin: float = 1.15
    texture: str = "waves"
    texture_frequency: float = 1.5
    n_landmarks: int = 40
    landmark_min_facing: float = 0.3
    frontal_min_dot: float = 0.5
    holdout: tuple[int, ...] = field(default_factory=tuple)
    bits: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.n_views < 2:
            raise ValueError(f"n_views must be >= 2, got {self.n_views}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")
        object.__setattr__(self, "holdout", tuple(int(v) for v in self.holdout))

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        d["axes"] = list(self.axes)
        d["holdout"] = list(self.holdout)
        return d


def ground_truth_surface(params: SyntheticParams) -> Surface:
    if params.shape == "sphere":
        return sphere(params.sphere_radius)
    if params.shape == "ellipsoid":
        return Ellipsoid(params.axes)
    return TwoLobeBlob()


def camera_ring(
    n_views: int,
    *,
    distance: float,
    elevation_deg: float,
    width: int,
    height: int,
    bounding_radius: float,
    fov_margin: float = 1.15,
) -> list[Camera]:
    """Cameras on a ring around +y looking at the origin; view 0 sits on +z.

    Elevation alternates above/below the equator. The focal length frames a
    sphere of `bounding_radius` with `fov_margin` to spare.
    """
    if bounding_radius >= distance:
        raise ValueError("cameras must sit outside the bounding sphere")
    half = np.arcsin(bounding_radius / distance)
    focal = 0.5 * min(width, height) / (np.tan(half) * fov_margin)
    cams: list[Camera] = []
    for k in range(n_views):
        theta = 2.0 * np.pi * k / n_views
        el = np.deg2rad(elevation_deg) * (1.0 if k % 2 == 0 else -1.0)
        eye = distance * np.array([np.sin(theta) * np.cos(el), np.sin(el), np.cos(theta) * np.cos(el)])
        cams.append(Camera.look_at(eye, (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), focal=focal, width=width, height=height))
    return cams


def check_in_frusta(surface: Surface, cameras: list[Camera]) -> None:
    pts = tessellate(surface, 3).vertices
    for k, cam in enumerate(cameras):
        pix, depth = project_points(cam, pts)
        inside = (depth > 0.0) & (pix[:, 0] >= 0.0) & (pix[:, 0] < cam.width) & (pix[:, 1] >= 0.0) & (pix[:, 1] < cam.height)
        if not inside.all():
            raise ValueError(f"view {k}: ground-truth surface leaves the image ({int((~inside).sum())} points outside)")


def make_landmarks(
    surface: Surface,
    template_vertices: np.ndarray,
    views: list[View],
    *,
    n_landmarks: int,
    min_facing: float,
    frontal_min_dot: float,
    rng: np.random.Generator,
) -> Optional[LandmarkSet]:
    """Projections of ground-truth points radially above chosen template vertices.

    Only frontal views are used; a point is kept in a view when it faces the
    camera, is not occluded and lands inside the mask.
    """
    if n_landmarks <= 0:
        return None
    ids = np.sort(rng.choice(template_vertices.shape[0], size=min(n_landmarks, template_vertices.shape[0]), replace=False))
    gt = surface_points(surface, template_vertices[ids] - np.asarray(surface.center))
    normals = surface_normals(surface, gt)
    rows_v: list[int] = []
    rows_i: list[int] = []
    rows_p: list[np.ndarray] = []
    for view in views:
        cam = view.camera
        if float(cam.forward @ FRONTAL_AXIS) < frontal_min_dot:
            continue
        eye = cam.center
        to_eye = eye[None, :] - gt
        dist = np.linalg.norm(to_eye, axis=1)
        facing = (normals * to_eye).sum(axis=1) / dist
        pix, depth = project_points(cam, gt)
        origin, dirs = camera_rays(cam, pix)
        _, t = march_rays(surface, origin, dirs)
        visible = (facing > min_facing) & (depth > 0.0) & (np.abs(t - dist) < 1e-6 * max(dist.max(), 1.0) + 1e-6)
        for k in np.nonzero(visible)[0]:
            col, row = int(np.floor(pix[k, 0])), int(np.floor(pix[k, 1]))
            if not (0 <= row < cam.height and 0 <= col < cam.width) or view.mask[row, col] < 0.5:
                continue
            rows_v.append(view.view_id)
            rows_i.append(int(ids[k]))
            rows_p.append(pix[k])
    if not rows_v:
        logger.warning("synthetic fixture: no landmark is visible in any frontal view")
        return None
    return LandmarkSet(np.asarray(rows_v), np.asarray(rows_i), np.stack(rows_p))


def build_synthetic_scene(params: SyntheticParams) -> SceneBundle:
    """In-memory fixture; `synth_scene` writes it to disk."""
    surface = ground_truth_surface(params)
    texture = ProceduralTexture(kind="constant" if params.texture == "constant" else "waves",
                                frequency=params.texture_frequency, seed=params.seed)
    template = icosphere(params.subdivisions, params.template_radius)
    cams = camera_ring(
        params.n_views,
        distance=params.distance,
        elevation_deg=params.elevation_deg,
        width=params.width,
        height=params.height,
        bounding_radius=max(surface.bounding_radius, params.template_radius),
        fov_margin=params.fov_margin,
    )
    check_in_frusta(surface, cams)
    views: list[View] = []
    for k, cam in enumerate(cams):
        image, mask, _ = render_oracle_view(surface, texture, cam)
        views.append(View(k, cam, image, mask))
    rng = np.random.default_rng([params.seed, 0x1D])
    landmarks = make_landmarks(
        surface,
        template.vertices,
        views,
        n_landmarks=params.n_landmarks,
        min_facing=params.landmark_min_facing,
        frontal_min_dot=params.frontal_min_dot,
        rng=rng,
    )
    fixture = {"surface": surface.to_json(), "texture": texture.to_json(), "params": params.to_json()}
    return SceneBundle(
        name=params.name,
        template=template,
        views=tuple(views),
        landmarks=landmarks,
        scale_hint=template.diagonal(),
        holdout=params.holdout,
        fixture=fixture,
    )


def synth_scene(params: SyntheticParams, out_dir: Path) -> SceneBundle:
    """Render the fixture, write it as a scene bundle and load it back."""
    scene = build_synthetic_scene(params)
    save_scene(Path(out_dir), scene, bits=params.bits)
    n_lm = 0 if scene.landmarks is None else len(scene.landmarks)
    logger.info("synthetic scene %r: %d views, %d landmark rows -> %s", params.name, scene.n_views, n_lm, out_dir)
    return load_scene(Path(out_dir))


__all__ = [
    "SHAPES",
    "SyntheticParams",
    "build_synthetic_scene",
    "camera_ring",
    "check_in_frusta",
    "ground_truth_surface",
    "make_landmarks",
    "synth_scene",
]
