"""Named parameter groups and their gradients.

Group names are flat strings; families share a prefix ("planes.xy",
"decoder.w0"). Shapes are fixed when a group is added.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Optional

import numpy as np

from meshvr.core.errors import ShapeMismatchError

VERTICES = "vertices"
SCALE = "s"
PLANE_GROUPS = ("planes.xy", "planes.xz", "planes.yz")
DECODER_GROUPS = tuple(f"decoder.{n}" for n in ("w0", "b0", "w1", "b1", "w2", "b2"))
ALL_GROUPS = (VERTICES, *PLANE_GROUPS, *DECODER_GROUPS, SCALE)

MIN_SCALE = 1e-6


def group_family(name: str) -> str:
    """'planes.xy' -> 'planes'; 'vertices' -> 'vertices'."""
    return name.split(".", 1)[0]


@dataclass
class ParamStore:
    groups: dict[str, np.ndarray] = field(default_factory=dict)
    learnable: dict[str, bool] = field(default_factory=dict)

    def add(self, name: str, value: Any, *, learnable: bool = True) -> None:
        if name in self.groups:
            raise KeyError(f"parameter group {name!r} already exists")
        self.groups[name] = np.array(value, dtype=np.float64)
        self.learnable[name] = learnable

    def __getitem__(self, name: str) -> np.ndarray:
        return self.groups[name]

    def __setitem__(self, name: str, value: Any) -> None:
        arr = np.asarray(value, dtype=np.float64)
        if name not in self.groups:
            raise KeyError(f"unknown parameter group {name!r}")
        if arr.shape != self.groups[name].shape:
            raise ShapeMismatchError(f"group {name!r}: shape {arr.shape} != {self.groups[name].shape}")
        self.groups[name] = arr.copy()

    def __contains__(self, name: object) -> bool:
        return name in self.groups

    def __iter__(self) -> Iterator[str]:
        return iter(self.groups)

    def names(self) -> list[str]:
        return list(self.groups)

    def set_learnable(self, names: Iterable[str], flag: bool = True) -> None:
        """Set the flag on groups matched by exact name or family prefix."""
        wanted = set(names)
        for name in self.groups:
            if name in wanted or group_family(name) in wanted:
                self.learnable[name] = flag

    def freeze_all(self) -> None:
        for name in self.groups:
            self.learnable[name] = False

    def learnable_names(self) -> list[str]:
        return [n for n in self.groups if self.learnable[n]]

    def project(self) -> None:
        """Keep s strictly positive."""
        if SCALE in self.groups:
            self.groups[SCALE] = np.maximum(self.groups[SCALE], MIN_SCALE)

    def copy(self) -> "ParamStore":
        return ParamStore({k: v.copy() for k, v in self.groups.items()}, dict(self.learnable))

    def zeros(self) -> "GradStore":
        return GradStore({k: np.zeros_like(v) for k, v in self.groups.items()})

    def flat_size(self, names: Optional[Iterable[str]] = None) -> int:
        return int(sum(self.groups[n].size for n in (names or self.groups)))


@dataclass
class GradStore:
    grads: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.grads[name]

    def __contains__(self, name: object) -> bool:
        return name in self.grads

    def __iter__(self) -> Iterator[str]:
        return iter(self.grads)

    def accumulate(self, name: str, value: np.ndarray) -> None:
        if name not in self.grads:
            raise KeyError(f"unknown gradient group {name!r}")
        self.grads[name] = self.grads[name] + value

    def scaled(self, factor: float) -> "GradStore":
        return GradStore({k: v * factor for k, v in self.grads.items()})

    def max_abs(self) -> dict[str, float]:
        return {k: float(np.abs(v).max()) if v.size else 0.0 for k, v in self.grads.items()}

    @classmethod
    def from_mapping(cls, params: ParamStore, grads: Mapping[str, np.ndarray]) -> "GradStore":
        """Gradients for learnable groups; zeros everywhere else."""
        out = params.zeros()
        for name in params.learnable_names():
            if name in grads:
                g = np.asarray(grads[name], dtype=np.float64)
                if g.shape != params[name].shape:
                    raise ShapeMismatchError(f"gradient for {name!r} has shape {g.shape}, expected {params[name].shape}")
                out.grads[name] = g.copy()
        return out


__all__ = [
    "ALL_GROUPS",
    "DECODER_GROUPS",
    "GradStore",
    "MIN_SCALE",
    "PLANE_GROUPS",
    "ParamStore",
    "SCALE",
    "VERTICES",
    "group_family",
]
