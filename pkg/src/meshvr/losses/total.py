"""Stage-dependent weighted loss composition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping

from meshvr.core.errors import MissingLossComponentError

Stage = Literal["1a", "1b", "2", "3"]

STAGE_COMPONENTS: dict[str, tuple[str, ...]] = {
    "1a": ("ldmk", "lap"),
    "1b": ("mask", "lap"),
    "2": ("color", "tv"),
    "3": ("color", "lap"),
}


@dataclass(frozen=True)
class LossWeights:
    color: float = 1.0
    tv_start: float = 1e-2
    tv_end: float = 1e-3
    ldmk: float = 1.0
    mask: float = 1.0
    lap: float = 19.0

    def __post_init__(self) -> None:
        for name in ("color", "tv_start", "tv_end", "ldmk", "mask", "lap"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"LossWeights.{name} must be >= 0")

    def tv(self, iteration: int, n_iterations: int) -> float:
        """Linear decay from tv_start (first iteration) to tv_end (last)."""
        if n_iterations <= 1:
            return self.tv_end
        frac = min(max(iteration, 0), n_iterations - 1) / (n_iterations - 1)
        return self.tv_start + (self.tv_end - self.tv_start) * frac


def stage_coefficients(
    stage: str,
    weights: LossWeights,
    *,
    iteration: int = 0,
    n_iterations: int = 1,
) -> dict[str, float]:
    if stage not in STAGE_COMPONENTS:
        raise ValueError(f"unknown stage {stage!r}; expected one of {sorted(STAGE_COMPONENTS)}")
    table = {
        "color": weights.color,
        "tv": weights.tv(iteration, n_iterations),
        "ldmk": weights.ldmk,
        "mask": weights.mask,
        "lap": weights.lap,
    }
    return {name: table[name] for name in STAGE_COMPONENTS[stage]}


@dataclass(frozen=True)
class LossReport:
    stage: str
    total: float
    components: dict[str, float]   # raw values
    weighted: dict[str, float]     # coefficient * value


def total_loss(
    stage: str,
    components: Mapping[str, float],
    weights: LossWeights,
    *,
    iteration: int = 0,
    n_iterations: int = 1,
) -> LossReport:
    coefs = stage_coefficients(stage, weights, iteration=iteration, n_iterations=n_iterations)
    missing = [name for name in coefs if name not in components]
    if missing:
        raise MissingLossComponentError(f"stage {stage}: missing loss components {missing}")
    weighted = {name: coefs[name] * float(components[name]) for name in coefs}
    return LossReport(
        stage=stage,
        total=float(sum(weighted.values())),
        components={name: float(components[name]) for name in coefs},
        weighted=weighted,
    )


__all__ = ["LossReport", "LossWeights", "STAGE_COMPONENTS", "Stage", "stage_coefficients", "total_loss"]
