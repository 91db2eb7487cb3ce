"""Full-pipeline gradient check on a tiny randomised scene.

The analytic gradient of colour L1 + mask + Laplacian losses (through
compositing, alphas, distances, tri-planes and decoder) is compared with
central differences. Sampling plans are frozen after the first render so
both sides see the same ray samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from meshvr.appearance.triplanes import PLANE_NAMES
from meshvr.core.camera import Camera
from meshvr.losses.geometric import laplacian_loss
from meshvr.losses.photometric import color_l1
from meshvr.losses.silhouette import mask_loss
from meshvr.optim.gradcheck import FdReport, fd_check
from meshvr.optim.params import ParamStore
from meshvr.optim.tape import Tape, backward
from meshvr.render.model import RenderModel
from meshvr.render.renderer import ChunkPlan, RenderSettings, record_render, render_view
from meshvr.render.sampling import pixel_centers
from meshvr.synth.fixture import camera_ring
from meshvr.synth.shapes import icosphere

GRADCHECK_THRESHOLDS = {"vertices": 5e-3}
DEFAULT_THRESHOLD = 1e-3
LAP_WEIGHT = 1e-2


@dataclass
class MicroScene:
    model: RenderModel
    camera: Camera
    pixels: np.ndarray
    target: np.ndarray
    mask_values: np.ndarray
    settings: RenderSettings
    seed: int


def micro_scene(seed: int = 7, size: int = 8, subdivisions: int = 1) -> MicroScene:
    rng = np.random.default_rng([seed, 0x6C])
    mesh = icosphere(subdivisions)
    mesh.set_vertices(mesh.vertices + rng.normal(scale=0.02, size=mesh.vertices.shape))
    model = RenderModel.create(mesh, scale=6.0, resolution=6, dims=(4, 3, 3), hidden=8, bands=2, seed=seed)
    for name in PLANE_NAMES:
        plane = model.planes.plane(name)
        setattr(model.planes, name, rng.uniform(-0.5, 0.5, size=plane.shape))
    camera = camera_ring(1, distance=3.0, elevation_deg=10.0, width=size, height=size, bounding_radius=1.2)[0]
    pixels = pixel_centers(size, size) + rng.uniform(-0.2, 0.2, size=(size * size, 2))
    return MicroScene(
        model=model,
        camera=camera,
        pixels=pixels,
        target=rng.uniform(0.0, 1.0, size=(size * size, 3)),
        mask_values=rng.integers(0, 2, size=size * size).astype(np.float64),
        settings=RenderSettings(n_samples=16, chunk_rays=16, jitter=True),
        seed=seed,
    )


def _objective(
    scene: MicroScene,
    model: RenderModel,
    valid: Optional[np.ndarray],
    plans: Optional[list[ChunkPlan]],
    tape: Optional[Tape],
) -> tuple[float, np.ndarray, list[ChunkPlan]]:
    res = render_view(model, scene.camera, scene.pixels, scene.settings, seed=scene.seed, plans=plans, record=tape is not None)
    if valid is None:
        valid = ~res.culled
    lc, gc = color_l1(res.color, scene.target, valid)
    lm, gm = mask_loss(res.opacity, scene.mask_values, res.culled)
    ll, gl = laplacian_loss(model.mesh)
    if tape is not None:
        c_slot, o_slot = record_render(tape, "micro", res)
        tape.record("scalar_loss", (c_slot,), ("loss.color",), [gc])
        tape.record("scalar_loss", (o_slot,), ("loss.mask",), [gm])
        tape.record("scalar_loss", ("vertices",), ("loss.lap",), [gl])
        tape.record("weighted_sum", ("loss.color", "loss.mask", "loss.lap"), ("loss",), [1.0, 1.0, LAP_WEIGHT])
    return lc + lm + LAP_WEIGHT * ll, valid, res.plans()


def pick_informative(grads: np.ndarray, k: int, rng: np.random.Generator, rel_floor: float = 1e-3) -> np.ndarray:
    """Up to k flat indices whose gradient is not negligible against the group maximum."""
    flat = np.abs(grads.reshape(-1))
    top = float(flat.max()) if flat.size else 0.0
    cand = np.nonzero(flat > rel_floor * top)[0] if top > 0.0 else np.arange(flat.size)
    return np.sort(rng.choice(cand, size=min(k, cand.size), replace=False))


def pipeline_gradcheck(seed: int = 7, *, eps: float = 1e-5, per_group: int = 4) -> FdReport:
    scene = micro_scene(seed)
    params = scene.model.to_params()
    tape = Tape()
    _, valid, plans = _objective(scene, scene.model, None, None, tape)
    grads = backward(tape, "loss", params)

    def loss_fn(p: ParamStore) -> float:
        return _objective(scene, scene.model.with_params(p), valid, plans, None)[0]

    rng = np.random.default_rng([seed, 0xFD])
    subset = {name: pick_informative(grads[name], per_group, rng) for name in params.names()}
    return fd_check(loss_fn, params, grads, subset, eps)


def report_passed(report: FdReport) -> bool:
    return report.passed(GRADCHECK_THRESHOLDS, DEFAULT_THRESHOLD)


__all__ = [
    "DEFAULT_THRESHOLD",
    "GRADCHECK_THRESHOLDS",
    "MicroScene",
    "micro_scene",
    "pick_informative",
    "pipeline_gradcheck",
    "report_passed",
]
