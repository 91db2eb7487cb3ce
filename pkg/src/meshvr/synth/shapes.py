"""Template and ground-truth shapes for synthetic fixtures.

Ground-truth surfaces are star-shaped around their centre: a point p lies on
the surface when |p - c| = r(direction). The implicit value
|p - c| - r(dir) is negative inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from meshvr.core.mesh import TriangleMesh

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_ICOSAHEDRON_VERTICES = [
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
]

# counter-clockwise seen from outside
_ICOSAHEDRON_FACES = [
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
]


def icosphere_arrays(subdivisions: int = 3, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Vertices/faces of a subdivided icosahedron; 10 * 4**k + 2 vertices."""
    if subdivisions < 0:
        raise ValueError(f"subdivisions must be >= 0, got {subdivisions}")
    verts = [list(v / np.linalg.norm(v)) for v in np.asarray(_ICOSAHEDRON_VERTICES, dtype=np.float64)]
    faces = [list(f) for f in _ICOSAHEDRON_FACES]
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = (np.asarray(verts[i]) + np.asarray(verts[j])) / 2.0
                midpoint[key] = len(verts)
                verts.append(list(m / np.linalg.norm(m)))
            return midpoint[key]

        new_faces: list[list[int]] = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        faces = new_faces
    return np.asarray(verts, dtype=np.float64) * float(radius), np.asarray(faces, dtype=np.int64)


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriangleMesh:
    """3 subdivisions give 642 vertices, 4 give 2562."""
    v, f = icosphere_arrays(subdivisions, radius)
    return TriangleMesh(v, f)


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0.0, n, 1.0)


@dataclass(frozen=True)
class Ellipsoid:
    axes: tuple[float, float, float]
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        axes = tuple(float(a) for a in self.axes)
        if len(axes) != 3 or min(axes) <= 0.0:
            raise ValueError(f"ellipsoid axes must be three positive numbers, got {self.axes}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def bounding_radius(self) -> float:
        return max(self.axes)

    def radius(self, dirs: Any) -> np.ndarray:
        d = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        return 1.0 / np.sqrt(((d / np.asarray(self.axes)) ** 2).sum(axis=1))

    def to_json(self) -> dict[str, Any]:
        return {"kind": "ellipsoid", "axes": list(self.axes), "center": list(self.center)}


@dataclass(frozen=True)
class TwoLobeBlob:
    """Sphere with two smooth Gaussian bumps: r(d) = r0 (1 + h * sum_j exp(-|d - c_j|^2 / w^2))."""

    base_radius: float = 0.9
    lobe_height: float = 0.35
    lobe_width: float = 0.55
    lobe_dirs: tuple[tuple[float, float, float], ...] = ((1.0, 0.35, 0.2), (-1.0, 0.35, 0.2))
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.base_radius <= 0.0 or self.lobe_width <= 0.0 or self.lobe_height <= -1.0:
            raise ValueError("blob needs base_radius > 0, lobe_width > 0 and lobe_height > -1")
        dirs = tuple(tuple(float(x) for x in _unit(np.asarray(d, dtype=np.float64))) for d in self.lobe_dirs)
        object.__setattr__(self, "lobe_dirs", dirs)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def bounding_radius(self) -> float:
        return self.base_radius * (1.0 + self.lobe_height * len(self.lobe_dirs))

    def radius(self, dirs: Any) -> np.ndarray:
        d = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        bump = np.zeros(d.shape[0])
        for c in self.lobe_dirs:
            bump += np.exp(-((d - np.asarray(c)) ** 2).sum(axis=1) / self.lobe_width**2)
        return self.base_radius * (1.0 + self.lobe_height * bump)

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "blob",
            "base_radius": self.base_radius,
            "lobe_height": self.lobe_height,
            "lobe_width": self.lobe_width,
            "lobe_dirs": [list(d) for d in self.lobe_dirs],
            "center": list(self.center),
        }


Surface = Union[Ellipsoid, TwoLobeBlob]


def sphere(radius: float = 1.0) -> Ellipsoid:
    return Ellipsoid((radius, radius, radius))


def implicit(surface: Surface, points: Any) -> np.ndarray:
    """|p - c| - r(dir); negative inside."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3) - np.asarray(surface.center)
    n = np.linalg.norm(p, axis=1)
    return n - surface.radius(_unit(p))


def surface_points(surface: Surface, dirs: Any) -> np.ndarray:
    """Radial projection of unit directions onto the surface."""
    d = _unit(np.asarray(dirs, dtype=np.float64).reshape(-1, 3))
    return np.asarray(surface.center) + surface.radius(d)[:, None] * d


def surface_normals(surface: Surface, points: Any, eps: float = 1e-6) -> np.ndarray:
    """Outward unit normals from central differences of the implicit value."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    grad = np.empty_like(p)
    for k in range(3):
        step = np.zeros(3)
        step[k] = eps
        grad[:, k] = (implicit(surface, p + step) - implicit(surface, p - step)) / (2.0 * eps)
    return _unit(grad)


def tessellate(surface: Surface, subdivisions: int = 6) -> TriangleMesh:
    """Dense mesh of the surface: icosphere vertices pushed radially onto it."""
    v, f = icosphere_arrays(subdivisions)
    return TriangleMesh(surface_points(surface, v), f)


def surface_from_json(obj: dict[str, Any]) -> Surface:
    kind = obj.get("kind")
    if kind == "ellipsoid":
        return Ellipsoid(tuple(obj["axes"]), tuple(obj.get("center", (0.0, 0.0, 0.0))))
    if kind == "blob":
        return TwoLobeBlob(
            base_radius=float(obj["base_radius"]),
            lobe_height=float(obj["lobe_height"]),
            lobe_width=float(obj["lobe_width"]),
            lobe_dirs=tuple(tuple(d) for d in obj["lobe_dirs"]),
            center=tuple(obj.get("center", (0.0, 0.0, 0.0))),
        )
    raise ValueError(f"unknown surface kind {kind!r}")


__all__ = [
    "Ellipsoid",
    "Surface",
    "TwoLobeBlob",
    "icosphere",
    "icosphere_arrays",
    "implicit",
    "sphere",
    "surface_from_json",
    "surface_normals",
    "surface_points",
    "tessellate",
]
