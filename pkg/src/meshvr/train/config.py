"""Training configuration: a frozen dataclass tree serialised as stable JSON.

`from_json` is strict: unknown keys are rejected with their dotted path, so a
typo in a config file never silently falls back to a default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, get_type_hints

from meshvr.bundle.manifest import write_json_stable
from meshvr.losses.total import LossWeights

STAGE_ORDER = ("1a", "1b", "2", "3")


@dataclass(frozen=True)
class StageSchedule:
    """Iterations per stage; stage 1 is split into landmark (1a) and mask (1b) halves."""

    stage1a: int = 20
    stage1b: int = 20
    stage2: int = 300
    stage3: int = 300

    def __post_init__(self) -> None:
        for name in ("stage1a", "stage1b", "stage2", "stage3"):
            if getattr(self, name) < 0:
                raise ValueError(f"stages.{name} must be >= 0")

    @property
    def stage1(self) -> int:
        return self.stage1a + self.stage1b

    def count(self, stage: str) -> int:
        return int(getattr(self, f"stage{stage}"))


@dataclass(frozen=True)
class LearningRates:
    planes: float = 2e-3
    decoder: float = 5e-4
    vertices: float = 3e-2
    s: float = 1e-3

    def __post_init__(self) -> None:
        for name in ("planes", "decoder", "vertices", "s"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"lrs.{name} must be >= 0")

    def table(self) -> dict[str, float]:
        return {"planes": self.planes, "decoder": self.decoder, "vertices": self.vertices, "s": self.s}


@dataclass(frozen=True)
class SamplingConfig:
    stride: int = 4
    jitter: float = 0.25            # amplitude as a fraction of the stride, < 0.5
    n_samples: int = 32
    band_factor: float = 4.0        # ray band half-width = band_factor / s
    chunk_rays: int = 1024
    workers: int = 1
    band_radius: int = 8            # mask contour band at `band_reference` pixels
    band_reference: int = 1024
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError("sampling.stride must be >= 1")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError("sampling.jitter must lie in [0, 0.5)")
        if self.n_samples < 2:
            raise ValueError("sampling.n_samples must be >= 2")
        if self.chunk_rays < 1 or self.workers < 1:
            raise ValueError("sampling.chunk_rays and sampling.workers must be >= 1")
        if self.band_radius < 1 or self.band_reference < 1:
            raise ValueError("sampling.band_radius and sampling.band_reference must be >= 1")
        object.__setattr__(self, "background", tuple(float(c) for c in self.background))

    @property
    def jitter_amplitude(self) -> float:
        return self.jitter * self.stride


@dataclass(frozen=True)
class DensityConfig:
    mode: str = "signed"
    s_init: Optional[float] = None  # None: 30 / scene scale hint

    def __post_init__(self) -> None:
        if self.mode not in ("signed", "unsigned"):
            raise ValueError(f"density.mode must be 'signed' or 'unsigned', got {self.mode!r}")
        if self.s_init is not None and self.s_init <= 0.0:
            raise ValueError("density.s_init must be > 0")


@dataclass(frozen=True)
class AppearanceConfig:
    resolution: int = 64
    dims: tuple[int, int, int] = (32, 16, 16)
    hidden: int = 64
    bands: int = 4
    plane_margin: float = 0.1

    def __post_init__(self) -> None:
        if self.resolution < 2:
            raise ValueError("appearance.resolution must be >= 2")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


@dataclass(frozen=True)
class TrainConfig:
    stages: StageSchedule = field(default_factory=StageSchedule)
    lrs: LearningRates = field(default_factory=LearningRates)
    weights: LossWeights = field(default_factory=LossWeights)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    density: DensityConfig = field(default_factory=DensityConfig)
    appearance: AppearanceConfig = field(default_factory=AppearanceConfig)
    seed: int = 0
    views: int = 0                  # 0: all training views, else the N most frontal
    checkpoint_every: int = 50      # 0: checkpoints at stage ends only
    tv_reduction: str = "mean"
    max_rollbacks: int = 4
    last_stage: str = "3"

    def __post_init__(self) -> None:
        if self.tv_reduction not in ("mean", "sum"):
            raise ValueError(f"tv_reduction must be 'mean' or 'sum', got {self.tv_reduction!r}")
        if self.last_stage not in STAGE_ORDER:
            raise ValueError(f"last_stage must be one of {STAGE_ORDER}, got {self.last_stage!r}")
        if self.views < 0 or self.checkpoint_every < 0 or self.max_rollbacks < 0:
            raise ValueError("views, checkpoint_every and max_rollbacks must be >= 0")

    def stage_plan(self) -> tuple[str, ...]:
        return STAGE_ORDER[: STAGE_ORDER.index(self.last_stage) + 1]

    # --- serialisation ---

    def to_dict(self) -> dict[str, Any]:
        return _to_plain(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Any) -> "TrainConfig":
        return _from_plain(cls, data, "config")

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"config: invalid JSON ({e})") from e
        return cls.from_dict(data)

    def with_overrides(self, **changes: Any) -> "TrainConfig":
        """Dotted-path overrides, e.g. with_overrides(**{"sampling.stride": 2, "seed": 7})."""
        data = self.to_dict()
        for path, value in changes.items():
            node = data
            *parents, leaf = path.split(".")
            for p in parents:
                node = node[p]
            if leaf not in node:
                raise ValueError(f"config: unknown key {path!r}")
            node[leaf] = value
        return TrainConfig.from_dict(data)


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(x) for x in obj]
    return obj


def _from_plain(cls: Any, data: Any, path: str) -> Any:
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected an object")
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValueError(f"{path}: unknown keys {[f'{path}.{k}' for k in unknown]}")
    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        hint = hints[name]
        if dataclasses.is_dataclass(hint):
            kwargs[name] = _from_plain(hint, value, f"{path}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{path}: {e}") from e


def load_config(path: Path) -> TrainConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return TrainConfig.from_json(p.read_text(encoding="utf-8"))


def save_config(path: Path, config: TrainConfig) -> None:
    write_json_stable(Path(path), config.to_dict())


__all__ = [
    "AppearanceConfig",
    "DensityConfig",
    "LearningRates",
    "STAGE_ORDER",
    "SamplingConfig",
    "StageSchedule",
    "TrainConfig",
    "load_config",
    "save_config",
]
