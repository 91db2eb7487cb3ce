"""Progressive fitting of the template to a scene.

Stages, in order:

    1a  vertices        landmark + Laplacian
    1b  vertices        mask (contour band) + Laplacian
    2   planes, decoder colour + scheduled TV
    3   all groups      colour + Laplacian, s learnable

One iteration uses every training view once (one grid-sampled pixel set per
view) and ends with one Adam step. All randomness is keyed by
(seed, stage, iteration, view), so resuming from a checkpoint replays the
same stream.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from meshvr.appearance.triplanes import PLANE_NAMES
from meshvr.bundle.mesh_io import write_obj
from meshvr.bundle.scene import SceneBundle, select_front_views
from meshvr.core.camera import Camera
from meshvr.core.errors import NoValidPixelsError, TrainingDivergedError
from meshvr.core.mesh import TriangleMesh
from meshvr.losses.geometric import LandmarkSet, landmark_loss, laplacian_loss
from meshvr.losses.photometric import color_l1, tv_cell_count, tv_loss
from meshvr.losses.silhouette import mask_contour_band, mask_loss, scaled_band_radius
from meshvr.losses.total import LossReport, stage_coefficients, total_loss
from meshvr.optim.adam import AdamState, adam_step
from meshvr.optim.params import PLANE_GROUPS, SCALE, VERTICES, ParamStore
from meshvr.optim.tape import Tape, backward
from meshvr.render.model import RenderModel
from meshvr.render.renderer import RenderSettings, record_render, render_view
from meshvr.render.sampling import pixel_indices, sample_grid_pixels

from .config import TrainConfig, save_config
from .log import TrainLog
from .state import ResumeState, load_resume, save_model, save_resume

logger = logging.getLogger(__name__)

STAGE_GROUPS: dict[str, tuple[str, ...]] = {
    "1a": (VERTICES,),
    "1b": (VERTICES,),
    "2": ("planes", "decoder"),
    "3": (VERTICES, "planes", "decoder", SCALE),
}
_STAGE_CODES = {"1a": 1, "1b": 2, "2": 3, "3": 4}
_PIXELS, _RAYS = 0, 1


class _NonFiniteLoss(Exception):
    pass


@dataclass(frozen=True)
class TrainView:
    view_id: int
    camera: Camera
    image: np.ndarray
    mask: np.ndarray
    band_pixels: np.ndarray   # (B, 2) centres of contour-band pixels
    band_values: np.ndarray   # (B,) mask values there


@dataclass
class FitResult:
    model: RenderModel
    log: TrainLog
    snapshots: dict[str, TriangleMesh]
    rollbacks: int
    out_dir: Optional[Path] = None

    @property
    def mesh(self) -> TriangleMesh:
        return self.model.mesh


def prepare_views(scene: SceneBundle, config: TrainConfig) -> list[TrainView]:
    """Training views (holdout excluded, optionally the N most frontal) with their contour bands."""
    views = scene.training_views()
    if config.views:
        views = select_front_views(views, config.views)
    out: list[TrainView] = []
    for v in views:
        h, w = v.mask.shape
        radius = scaled_band_radius(config.sampling.band_radius, h, w, config.sampling.band_reference)
        band = mask_contour_band(v.mask, radius)
        rows, cols = np.nonzero(band)
        px = np.stack([cols + 0.5, rows + 0.5], axis=1).astype(np.float64)
        out.append(TrainView(v.view_id, v.camera, v.image, v.mask, px, v.mask[rows, cols].astype(np.float64)))
    if len(out) < 1:
        raise ValueError("no training views left after holdout/view selection")
    return out


def initial_model(scene: SceneBundle, config: TrainConfig) -> RenderModel:
    app = config.appearance
    s = config.density.s_init if config.density.s_init is not None else 30.0 / scene.scale_hint
    return RenderModel.create(
        scene.template.copy(),
        scale=s,
        mode="unsigned" if config.density.mode == "unsigned" else "signed",
        resolution=app.resolution,
        dims=app.dims,
        hidden=app.hidden,
        bands=app.bands,
        plane_margin=app.plane_margin,
        seed=config.seed,
    )


@dataclass
class Trainer:
    scene: SceneBundle
    config: TrainConfig
    model: RenderModel
    views: list[TrainView]
    out_dir: Optional[Path] = None
    params: ParamStore = field(init=False)
    adam: AdamState = field(default_factory=AdamState)
    lrs: dict[str, float] = field(default_factory=dict)
    log: TrainLog = field(default_factory=TrainLog)
    rollbacks: int = 0
    snapshots: dict[str, TriangleMesh] = field(default_factory=dict)
    _snapshot: Optional[ResumeState] = field(default=None, repr=False)
    _rolled_back: bool = field(default=False, repr=False)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def __post_init__(self) -> None:
        self.params = self.model.to_params()
        self.params.freeze_all()
        if not self.lrs:
            self.lrs = self.config.lrs.table()

    @classmethod
    def create(cls, scene: SceneBundle, config: TrainConfig, out_dir: Optional[Path] = None) -> "Trainer":
        return cls(scene, config, initial_model(scene, config), prepare_views(scene, config), out_dir)

    @classmethod
    def resume(cls, scene: SceneBundle, config: TrainConfig, path: Path, out_dir: Optional[Path] = None) -> "Trainer":
        model, state = load_resume(path)
        if not np.array_equal(model.mesh.faces, scene.template.faces):
            raise ValueError(f"{path}: checkpoint faces do not match the scene template")
        trainer = cls(scene, config, model, prepare_views(scene, config), out_dir)
        trainer._restore(state)
        trainer._snapshot = state
        return trainer

    # --- state ---

    def _state(self, stage: str, iteration: int) -> ResumeState:
        return ResumeState(
            stage=stage,
            iteration=iteration,
            params=self.params.copy(),
            adam=self.adam.copy(),
            lrs=dict(self.lrs),
            log=self.log.copy(),
            rollbacks=self.rollbacks,
            config=self.config.to_dict(),
        )

    def _restore(self, state: ResumeState) -> None:
        self.params = state.params.copy()
        self.adam = state.adam.copy()
        self.lrs = dict(state.lrs)
        self.log = state.log.copy()
        self.rollbacks = state.rollbacks
        self.model.load_params(self.params)

    def _checkpoint(self, stage: str, iteration: int) -> None:
        state = self._state(stage, iteration)
        self._snapshot = state
        if self.out_dir is not None:
            save_resume(self.out_dir / "checkpoints" / f"ckpt_{stage}_{iteration:05d}.mvr", self.model, state)

    def begin_stage(self, stage: str) -> None:
        """Fresh Adam moments; only the stage's groups are learnable."""
        self.params.freeze_all()
        self.params.set_learnable(STAGE_GROUPS[stage])
        self.adam = AdamState()

    # --- one iteration ---

    def settings(self, stage: str) -> RenderSettings:
        s = self.config.sampling
        return RenderSettings(
            n_samples=s.n_samples,
            band_factor=s.band_factor,
            background=s.background,
            jitter=True,
            chunk_rays=s.chunk_rays,
            workers=s.workers,
            with_color=stage in ("2", "3"),
        )

    def _seed(self, stage: str, iteration: int, view_id: int, purpose: int) -> list[int]:
        return [self.config.seed, _STAGE_CODES[stage], iteration, view_id, purpose]

    def _landmarks(self) -> Optional[LandmarkSet]:
        lm = self.scene.landmarks
        if lm is None:
            return None
        lm = lm.subset({v.view_id for v in self.views})
        return lm if len(lm) else None

    def _record_landmarks(self, tape: Tape, comps: dict[str, float]) -> None:
        lm = self._landmarks()
        assert lm is not None
        cams = {v.view_id: v.camera for v in self.views}
        val, grad = landmark_loss(self.model.mesh.vertices, cams, lm)
        tape.record("scalar_loss", (VERTICES,), ("loss.ldmk",), [grad])
        comps["ldmk"] = val

    def _record_mask(self, tape: Tape, comps: dict[str, float], stage: str, it: int) -> int:
        settings = self.settings(stage)
        slots: list[str] = []
        opac: list[np.ndarray] = []
        values: list[np.ndarray] = []
        culled: list[np.ndarray] = []
        for v in self.views:
            if v.band_pixels.shape[0] == 0:
                continue
            res = render_view(self.model, v.camera, v.band_pixels, settings, seed=self._seed(stage, it, v.view_id, _RAYS))
            slots.append(record_render(tape, f"view{v.view_id}", res)[1])
            opac.append(res.opacity)
            values.append(v.band_values)
            culled.append(res.culled)
        if not slots:
            raise NoValidPixelsError("stage 1b: no training view has a mask contour")
        val, grad = mask_loss(np.concatenate(opac), np.concatenate(values), np.concatenate(culled))
        splits = np.split(grad, np.cumsum([o.shape[0] for o in opac])[:-1])
        tape.record("scalar_loss", slots, ("loss.mask",), splits)
        comps["mask"] = val
        return int(sum(o.shape[0] for o in opac))

    def _record_color(self, tape: Tape, comps: dict[str, float], stage: str, it: int) -> int:
        settings = self.settings(stage)
        s = self.config.sampling
        slots: list[str] = []
        rendered: list[np.ndarray] = []
        observed: list[np.ndarray] = []
        valid: list[np.ndarray] = []
        for v in self.views:
            cam = v.camera
            px = sample_grid_pixels(cam.width, cam.height, s.stride, s.jitter_amplitude,
                                    seed=self._seed(stage, it, v.view_id, _PIXELS))
            res = render_view(self.model, cam, px, settings, seed=self._seed(stage, it, v.view_id, _RAYS))
            slots.append(record_render(tape, f"view{v.view_id}", res)[0])
            row, col = pixel_indices(px, cam.width, cam.height)
            rendered.append(res.color)
            observed.append(v.image[row, col])
            valid.append((v.mask[row, col] > 0.5) & ~res.culled)
        val, grad = color_l1(np.concatenate(rendered), np.concatenate(observed), np.concatenate(valid))
        splits = np.split(grad, np.cumsum([r.shape[0] for r in rendered])[:-1])
        tape.record("scalar_loss", slots, ("loss.color",), splits)
        comps["color"] = val
        return int(sum(int(x.sum()) for x in valid))

    def _record_tv(self, tape: Tape, comps: dict[str, float]) -> None:
        planes = [self.model.planes.plane(n) for n in PLANE_NAMES]
        val, grads = tv_loss(planes)
        if self.config.tv_reduction == "mean":
            cells = max(tv_cell_count(planes), 1)
            val, grads = val / cells, [g / cells for g in grads]
        tape.record("scalar_loss", PLANE_GROUPS, ("loss.tv",), grads)
        comps["tv"] = val

    def iterate(self, stage: str, it: int, n_it: int) -> LossReport:
        """Forward, backward and one Adam step; raises _NonFiniteLoss before touching parameters."""
        tape = Tape()
        comps: dict[str, float] = {}
        n_valid = 0
        if stage == "1a":
            self._record_landmarks(tape, comps)
        elif stage == "1b":
            n_valid = self._record_mask(tape, comps, stage, it)
        else:
            n_valid = self._record_color(tape, comps, stage, it)
        if stage == "2":
            self._record_tv(tape, comps)
        else:
            val, grad = laplacian_loss(self.model.mesh)
            tape.record("scalar_loss", (VERTICES,), ("loss.lap",), [grad])
            comps["lap"] = val

        report = total_loss(stage, comps, self.config.weights, iteration=it, n_iterations=n_it)
        coefs = stage_coefficients(stage, self.config.weights, iteration=it, n_iterations=n_it)
        tape.record("weighted_sum", [f"loss.{n}" for n in coefs], ("loss",), [coefs[n] for n in coefs])
        if not np.isfinite(report.total):
            raise _NonFiniteLoss(f"stage {stage} iteration {it}: total loss {report.total}")
        grads = backward(tape, "loss", self.params)
        bad = [n for n in self.params.learnable_names() if not np.isfinite(grads[n]).all()]
        if bad:
            raise _NonFiniteLoss(f"stage {stage} iteration {it}: non-finite gradients in {bad}")

        adam_step(self.params, grads, self.lrs, self.adam)
        self.model.load_params(self.params)

        s_val = float(self.params[SCALE][0])
        rec = {
            "stage": stage,
            "iteration": it,
            "total": report.total,
            **report.components,
            "s": s_val,
            "lr_vertices": self.lrs["vertices"],
            "n_valid": n_valid,
            "rollback": int(self._rolled_back),
            "wall_time": time.perf_counter() - self._t0,
        }
        self._rolled_back = False
        self.log.append(rec)
        logger.info("stage %s iter %d/%d: loss %.6g s %.4g", stage, it + 1, n_it, report.total, s_val)
        return report

    def _rollback(self, stage: str, reason: str) -> int:
        snap = self._snapshot
        if snap is None or self.rollbacks >= self.config.max_rollbacks:
            raise TrainingDivergedError(f"{reason}; giving up after {self.rollbacks} rollbacks")
        lrs = dict(self.lrs)
        self._restore(snap)
        self.rollbacks += 1
        self.lrs = lrs
        self.lrs["vertices"] *= 0.5
        self._rolled_back = True
        logger.warning(
            "%s: rolled back to stage %s iteration %d, vertex lr halved to %g",
            reason, snap.stage, snap.iteration, self.lrs["vertices"],
        )
        return snap.iteration

    # --- stages ---

    def run_stage(self, stage: str, start: int = 0) -> None:
        n = self.config.stages.count(stage)
        if self._snapshot is None or self._snapshot.stage != stage or self._snapshot.iteration != start:
            self._snapshot = self._state(stage, start)
        every = self.config.checkpoint_every
        it = start
        while it < n:
            try:
                self.iterate(stage, it, n)
            except _NonFiniteLoss as e:
                it = self._rollback(stage, str(e))
                continue
            it += 1
            if every and it % every == 0 and it < n:
                self._checkpoint(stage, it)
        self._checkpoint(stage, n)

    def _snapshot_mesh(self, tag: str) -> None:
        mesh = self.model.mesh.copy()
        self.snapshots[tag] = mesh
        if self.out_dir is not None:
            write_obj(self.out_dir / f"mesh_stage{tag}.obj", mesh, header=f"meshvr stage {tag}")

    def run_stage1(self, start_stage: str = "1a", start: int = 0) -> TriangleMesh:
        """Geometry initialisation; s and appearance stay fixed."""
        if start_stage == "1a":
            if self._landmarks() is None:
                logger.warning("stage 1a skipped: scene has no landmarks in the training views (mask-only init)")
            else:
                if start == 0:
                    self.begin_stage("1a")
                self.run_stage("1a", start)
            self._snapshot_mesh("1a")
            start = 0
        if self.config.last_stage != "1a":
            if start == 0:
                self.begin_stage("1b")
            self.run_stage("1b", start)
            self._snapshot_mesh("1b")
        return self.model.mesh

    def run_stage2(self, start: int = 0) -> RenderModel:
        """Appearance only; vertices and s frozen."""
        if start == 0:
            self.begin_stage("2")
        self.run_stage("2", start)
        return self.model

    def run_stage3(self, start: int = 0) -> RenderModel:
        """Joint geometry and appearance with learnable s; the octree follows every vertex update."""
        if start == 0:
            self.begin_stage("3")
        self.run_stage("3", start)
        self._snapshot_mesh("3")
        return self.model

    def fit(self, start_stage: str = "1a", start: int = 0) -> FitResult:
        faces_before = self.model.mesh.faces_bytes()
        plan = self.config.stage_plan()
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            save_config(self.out_dir / "config.json", self.config)
        if start_stage in ("1a", "1b"):
            self.run_stage1(start_stage, start)
            start = 0
        if "2" in plan and start_stage in ("1a", "1b", "2"):
            self.run_stage2(start)
            start = 0
        if "3" in plan:
            self.run_stage3(start)
        if self.model.mesh.faces_bytes() != faces_before:
            raise RuntimeError("face connectivity changed during fitting")
        self._write_outputs()
        return FitResult(self.model, self.log, dict(self.snapshots), self.rollbacks, self.out_dir)

    def _write_outputs(self) -> None:
        if self.out_dir is None:
            return
        write_obj(self.out_dir / "final_mesh.obj", self.model.mesh, header="meshvr final mesh")
        save_model(self.out_dir / "model.mvr", self.model, extra={"scene": self.scene.name})
        self.log.write_jsonl(self.out_dir / "log.jsonl")
        self.log.write_csv(self.out_dir / "log.csv")


def fit(
    scene: SceneBundle,
    config: TrainConfig,
    out_dir: Optional[Path] = None,
    *,
    resume_from: Optional[Path] = None,
) -> FitResult:
    """Run every configured stage; `resume_from` continues from a resume checkpoint."""
    out = Path(out_dir) if out_dir is not None else None
    if resume_from is None:
        return Trainer.create(scene, config, out).fit()
    trainer = Trainer.resume(scene, config, Path(resume_from), out)
    snap = trainer._snapshot
    assert snap is not None
    logger.info("resuming at stage %s iteration %d from %s", snap.stage, snap.iteration, resume_from)
    return trainer.fit(snap.stage, snap.iteration)


__all__ = ["FitResult", "STAGE_GROUPS", "TrainView", "Trainer", "fit", "initial_model", "prepare_views"]
