"""Model export and resume checkpoints on top of the bundle checkpoint codec.

Exported models ("model" kind) hold the renderable state as "<f4".
Resume checkpoints ("resume" kind) hold the same arrays as "<f8" plus Adam
moments, learning rates, the stage cursor and the log so far, which is
enough to continue a run bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from meshvr.appearance.decoder import DECODER_PARAM_NAMES, MlpDecoder
from meshvr.appearance.encoding import PositionalEncoding
from meshvr.appearance.triplanes import TriPlanes
from meshvr.bundle.checkpoint import read_checkpoint, write_checkpoint
from meshvr.core.mesh import TriangleMesh
from meshvr.optim.adam import AdamState
from meshvr.optim.params import ParamStore
from meshvr.render.density import DensityMapping
from meshvr.render.model import RenderModel

from .log import TrainLog

MODEL_KIND = "model"
RESUME_KIND = "resume"

_FACES = "mesh.faces"
_BOUNDS_MIN = "planes.bounds_min"
_BOUNDS_MAX = "planes.bounds_max"


def model_arrays(model: RenderModel, params: Optional[ParamStore] = None) -> dict[str, np.ndarray]:
    store = params if params is not None else model.to_params()
    arrays = {name: store[name] for name in store.names()}
    arrays[_FACES] = model.mesh.faces.astype(np.float64)
    arrays[_BOUNDS_MIN] = model.planes.bounds_min
    arrays[_BOUNDS_MAX] = model.planes.bounds_max
    return arrays


def model_metadata(model: RenderModel, kind: str = MODEL_KIND) -> dict[str, Any]:
    return {"kind": kind, "density_mode": model.density.mode, "bands": model.encoding.bands}


def model_from_arrays(arrays: Mapping[str, np.ndarray], metadata: Mapping[str, Any], source: str) -> RenderModel:
    def need(name: str) -> np.ndarray:
        if name not in arrays:
            raise ValueError(f"{source}: checkpoint is missing array {name!r}")
        return np.asarray(arrays[name], dtype=np.float64)

    mesh = TriangleMesh(need("vertices"), np.rint(need(_FACES)).astype(np.int64), check_area=False)
    planes = TriPlanes(need("planes.xy"), need("planes.xz"), need("planes.yz"), need(_BOUNDS_MIN), need(_BOUNDS_MAX))
    decoder = MlpDecoder(*(need(f"decoder.{n}") for n in DECODER_PARAM_NAMES))
    density = DensityMapping(float(need("s")[0]), metadata.get("density_mode", "signed"))
    return RenderModel(mesh, planes, decoder, density, PositionalEncoding(int(metadata.get("bands", 4))))


def save_model(path: Path, model: RenderModel, *, extra: Optional[Mapping[str, Any]] = None) -> None:
    meta = model_metadata(model)
    if extra:
        meta.update(extra)
    write_checkpoint(Path(path), model_arrays(model), meta, dtype="<f4")


def load_model(path: Path) -> RenderModel:
    arrays, meta = read_checkpoint(Path(path))
    if meta.get("kind") not in (MODEL_KIND, RESUME_KIND):
        raise ValueError(f"{path}: unknown checkpoint kind {meta.get('kind')!r}")
    return model_from_arrays(arrays, meta, str(path))


@dataclass
class ResumeState:
    stage: str
    iteration: int                  # next iteration to run in `stage`
    params: ParamStore
    adam: AdamState
    lrs: dict[str, float]
    log: TrainLog
    rollbacks: int = 0
    config: dict[str, Any] = field(default_factory=dict)


def save_resume(path: Path, model: RenderModel, state: ResumeState) -> None:
    arrays = model_arrays(model, state.params)
    for name, m in state.adam.m.items():
        arrays[f"adam.m.{name}"] = m
        arrays[f"adam.v.{name}"] = state.adam.v[name]
    meta = model_metadata(model, RESUME_KIND)
    meta.update(
        {
            "stage": state.stage,
            "iteration": state.iteration,
            "learnable": dict(state.params.learnable),
            "lrs": dict(state.lrs),
            "adam": {"beta1": state.adam.beta1, "beta2": state.adam.beta2, "eps": state.adam.eps,
                     "step": dict(state.adam.step)},
            "log": [{**r, "wall_time": None} for r in state.log.records],
            "rollbacks": state.rollbacks,
            "config": state.config,
        }
    )
    write_checkpoint(Path(path), arrays, meta, dtype="<f8")


def load_resume(path: Path) -> tuple[RenderModel, ResumeState]:
    src = str(path)
    arrays, meta = read_checkpoint(Path(path))
    if meta.get("kind") != RESUME_KIND:
        raise ValueError(f"{src}: not a resume checkpoint (kind {meta.get('kind')!r})")
    model = model_from_arrays(arrays, meta, src)
    params = model.to_params()
    params.freeze_all()
    params.set_learnable([n for n, flag in meta.get("learnable", {}).items() if flag])
    a = meta["adam"]
    adam = AdamState(beta1=float(a["beta1"]), beta2=float(a["beta2"]), eps=float(a["eps"]))
    for name, step in a["step"].items():
        adam.m[name] = np.asarray(arrays[f"adam.m.{name}"], dtype=np.float64)
        adam.v[name] = np.asarray(arrays[f"adam.v.{name}"], dtype=np.float64)
        adam.step[name] = int(step)
    state = ResumeState(
        stage=str(meta["stage"]),
        iteration=int(meta["iteration"]),
        params=params,
        adam=adam,
        lrs={k: float(v) for k, v in meta["lrs"].items()},
        log=TrainLog.from_records(meta["log"]),
        rollbacks=int(meta.get("rollbacks", 0)),
        config=dict(meta.get("config", {})),
    )
    return model, state


__all__ = [
    "MODEL_KIND",
    "RESUME_KIND",
    "ResumeState",
    "load_model",
    "load_resume",
    "model_arrays",
    "model_from_arrays",
    "save_model",
    "save_resume",
]
