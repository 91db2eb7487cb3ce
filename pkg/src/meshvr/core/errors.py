"""Domain exceptions for meshvr.

Input errors derive from `ValueError`. `MissingVjpError` and
`TrainingDivergedError` are internal failures and derive from `RuntimeError`.
Messages are stable and suitable for test assertions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class DegenerateTriangleError(ValueError):
    """A triangle has (near) zero area."""


class EmptyMeshError(ValueError):
    """An operation needs at least one triangle."""


class StaleIndexError(ValueError):
    """A spatial index was built for a different vertex revision."""


class BehindCameraError(ValueError):
    """A point projects with non-positive depth."""


class ShapeMismatchError(ValueError):
    """Array shapes disagree with the expected layer/group layout."""


class MissingVjpError(RuntimeError):
    """A recorded tape op has no registered vector-Jacobian product."""


class TrainingDivergedError(RuntimeError):
    """Training kept producing non-finite losses after every allowed rollback."""


class MissingLossComponentError(ValueError):
    """A training stage needs a loss component that was not supplied."""


class NoValidPixelsError(ValueError):
    """A per-pixel loss was evaluated with an empty valid set."""


@dataclass(frozen=True)
class Violation:
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


class SceneValidationError(ValueError):
    """Aggregates multiple scene/mesh validation failures.

    Violations are sorted so the message is deterministic.
    """

    def __init__(self, violations: Iterable[Violation]):
        v = sorted(violations, key=lambda x: (x.where, x.message))
        if not v:
            super().__init__("scene validation failed (no details)")
        else:
            super().__init__("scene validation failed:\n" + "\n".join(f"  - {item}" for item in v))
        self.violations = v


__all__ = [
    "BehindCameraError",
    "DegenerateTriangleError",
    "EmptyMeshError",
    "MissingLossComponentError",
    "MissingVjpError",
    "NoValidPixelsError",
    "SceneValidationError",
    "ShapeMismatchError",
    "StaleIndexError",
    "TrainingDivergedError",
    "Violation",
]
