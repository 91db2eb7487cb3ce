"""Scene bundles on disk: template mesh, calibrated views, masks, landmarks.

Layout written by `save_scene`:

    scene.json               manifest (schema meshvr-scene-1)
    template.obj
    images/view_000.ppm ...
    masks/view_000.pgm ...
    landmarks.csv            optional
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from meshvr.core.camera import Camera
from meshvr.core.errors import SceneValidationError, Violation
from meshvr.core.mesh import TriangleMesh
from meshvr.losses.geometric import LandmarkSet

from .image_io import read_image, write_image
from .manifest import build_manifest, read_manifest, source_record, verify_sources, write_manifest
from .mesh_io import read_obj, write_obj
from .tables import read_landmarks, write_landmarks

MANIFEST_NAME = "scene.json"
FRONTAL_AXIS = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class View:
    view_id: int
    camera: Camera
    image: np.ndarray   # (H, W, 3) linear [0, 1]
    mask: np.ndarray    # (H, W) {0, 1}


@dataclass(frozen=True)
class SceneBundle:
    name: str
    template: TriangleMesh
    views: tuple[View, ...]
    landmarks: Optional[LandmarkSet] = None
    scale_hint: float = 1.0
    holdout: tuple[int, ...] = ()
    fixture: Optional[dict[str, Any]] = None
    root: Optional[Path] = None
    manifest: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        violations = validate_scene(self)
        if violations:
            raise SceneValidationError(violations)

    @property
    def n_views(self) -> int:
        return len(self.views)

    def view(self, view_id: int) -> View:
        for v in self.views:
            if v.view_id == view_id:
                return v
        raise KeyError(f"no view with id {view_id}")

    def cameras(self) -> dict[int, Camera]:
        return {v.view_id: v.camera for v in self.views}

    def training_views(self) -> list[View]:
        held = set(self.holdout)
        return [v for v in self.views if v.view_id not in held]

    def holdout_views(self) -> list[View]:
        held = set(self.holdout)
        return [v for v in self.views if v.view_id in held]


def validate_scene(scene: SceneBundle) -> list[Violation]:
    v: list[Violation] = []
    if len(scene.views) < 2:
        v.append(Violation("views", f"need at least 2 views, got {len(scene.views)}"))
    ids = [view.view_id for view in scene.views]
    if len(set(ids)) != len(ids):
        v.append(Violation("views", "view ids must be unique"))
    for view in scene.views:
        where = f"view {view.view_id}"
        hw = (view.camera.height, view.camera.width)
        if view.image.ndim != 3 or view.image.shape[2] != 3:
            v.append(Violation(where, f"image must be (H, W, 3), got {view.image.shape}"))
        elif view.image.shape[:2] != hw:
            v.append(Violation(where, f"image size {view.image.shape[:2]} does not match camera {hw}"))
        if view.mask.shape != view.image.shape[:2]:
            v.append(Violation(where, f"mask size {view.mask.shape} does not match image {view.image.shape[:2]}"))
    if scene.landmarks is not None:
        unknown = sorted(set(scene.landmarks.views) - set(ids))
        if unknown:
            v.append(Violation("landmarks", f"refer to unknown views {unknown}"))
        bad = (scene.landmarks.vertex_ids < 0) | (scene.landmarks.vertex_ids >= scene.template.n_vertices)
        if bad.any():
            v.append(Violation("landmarks", f"vertex indices out of range: {scene.landmarks.vertex_ids[bad][:10].tolist()}"))
    missing = sorted(set(scene.holdout) - set(ids))
    if missing:
        v.append(Violation("holdout", f"refers to unknown views {missing}"))
    if not scene.scale_hint > 0.0:
        v.append(Violation("scale_hint", "must be > 0"))
    return v


def select_front_views(views: Sequence[View], n: int, frontal_axis: Any = FRONTAL_AXIS) -> list[View]:
    """The n views whose viewing axis best aligns with `frontal_axis` (ties: lower id), in id order."""
    if n <= 0 or n >= len(views):
        return list(views)
    axis = np.asarray(frontal_axis, dtype=np.float64)
    score = np.array([float(v.camera.forward @ axis) for v in views])
    ids = np.array([v.view_id for v in views])
    order = np.lexsort((ids, -score))[:n]
    keep = set(int(ids[k]) for k in order)
    return [v for v in views if v.view_id in keep]


def camera_from_json(obj: Any, where: str) -> Camera:
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: camera must be an object")
    try:
        K = np.asarray(obj["K"], dtype=np.float64).reshape(3, 3)
        R = np.asarray(obj["R"], dtype=np.float64).reshape(3, 3)
        t = np.asarray(obj["t"], dtype=np.float64).reshape(3)
        width, height = int(obj["width"]), int(obj["height"])
    except KeyError as e:
        raise ValueError(f"{where}: camera missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise ValueError(f"{where}: malformed camera ({e})") from None
    try:
        return Camera(K=K, R=R, t=t, width=width, height=height)
    except SceneValidationError as e:
        raise ValueError(f"{where}: {e}") from None


def _as_rgb(img: np.ndarray) -> np.ndarray:
    return np.repeat(img[:, :, None], 3, axis=2) if img.ndim == 2 else img


def _as_mask(img: np.ndarray) -> np.ndarray:
    m = img.mean(axis=2) if img.ndim == 3 else img
    return (m > 0.5).astype(np.float64)


def load_scene(path: Path, *, validate_hashes: bool = False) -> SceneBundle:
    """Load and validate a scene from its directory or its scene.json."""
    p = Path(path)
    manifest_path = p / MANIFEST_NAME if p.is_dir() else p
    if not manifest_path.is_file():
        raise FileNotFoundError(f"scene manifest not found: {manifest_path}")
    root = manifest_path.parent
    manifest = read_manifest(manifest_path)
    if validate_hashes:
        verify_sources(root, manifest)

    for key in ("name", "template", "views"):
        if key not in manifest:
            raise ValueError(f"{manifest_path}: missing required field {key!r}")
    template = read_obj(root / manifest["template"])

    views_obj = manifest["views"]
    if not isinstance(views_obj, list):
        raise ValueError(f"{manifest_path}: views must be an array")
    views: list[View] = []
    for k, item in enumerate(views_obj):
        where = f"{manifest_path}: views[{k}]"
        if not isinstance(item, dict):
            raise ValueError(f"{where}: expected object")
        for key in ("id", "camera", "image", "mask"):
            if key not in item:
                raise ValueError(f"{where}: missing field {key!r}")
        cam = camera_from_json(item["camera"], f"{where} (view {item['id']})")
        views.append(
            View(
                view_id=int(item["id"]),
                camera=cam,
                image=_as_rgb(read_image(root / item["image"])),
                mask=_as_mask(read_image(root / item["mask"])),
            )
        )

    landmarks = None
    if manifest.get("landmarks"):
        landmarks = read_landmarks(root / manifest["landmarks"], n_vertices=template.n_vertices)

    return SceneBundle(
        name=str(manifest["name"]),
        template=template,
        views=tuple(views),
        landmarks=landmarks,
        scale_hint=float(manifest.get("scale_hint", 1.0)),
        holdout=tuple(int(x) for x in manifest.get("holdout", [])),
        fixture=manifest.get("fixture"),
        root=root,
        manifest=manifest,
    )


def save_scene(
    root: Path,
    scene: SceneBundle,
    *,
    image_format: str = "ppm",
    bits: int = 8,
    created_utc: Optional[str] = None,
) -> dict[str, Any]:
    """Write every file of `scene` under root and return the manifest."""
    if image_format not in ("ppm", "png"):
        raise ValueError(f"image_format must be 'ppm' or 'png', got {image_format!r}")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    mask_ext = "pgm" if image_format == "ppm" else "png"

    rels: list[str] = ["template.obj"]
    write_obj(root / "template.obj", scene.template)
    views_json: list[dict[str, Any]] = []
    for view in scene.views:
        img_rel = f"images/view_{view.view_id:03d}.{image_format}"
        mask_rel = f"masks/view_{view.view_id:03d}.{mask_ext}"
        write_image(root / img_rel, view.image, bits=bits)
        write_image(root / mask_rel, view.mask, bits=8)
        rels += [img_rel, mask_rel]
        views_json.append({"id": view.view_id, "camera": view.camera.to_json_dict(), "image": img_rel, "mask": mask_rel})

    lm_rel = None
    if scene.landmarks is not None:
        lm_rel = "landmarks.csv"
        write_landmarks(root / lm_rel, scene.landmarks)
        rels.append(lm_rel)

    manifest = build_manifest(
        name=scene.name,
        template="template.obj",
        views=views_json,
        sources=[source_record(root, r) for r in rels],
        landmarks=lm_rel,
        scale_hint=scene.scale_hint,
        holdout=list(scene.holdout),
        fixture=scene.fixture,
        created_utc=created_utc,
    )
    write_manifest(root / MANIFEST_NAME, manifest)
    return manifest


__all__ = [
    "MANIFEST_NAME",
    "SceneBundle",
    "View",
    "camera_from_json",
    "load_scene",
    "save_scene",
    "select_front_views",
    "validate_scene",
]
