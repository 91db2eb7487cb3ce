"""Triangle mesh with fixed topology and exact point-to-triangle queries.

The closest-point kernel is the region-walk of Ericson's "Real-Time Collision
Detection", vectorised over arrays of (point, triangle) pairs. Scalar helpers
wrap the batched kernel so there is one code path for both.

Region codes used by the batched kernel:

  0       face interior
  1, 2, 3 edges (a,b), (b,c), (c,a)
  4, 5, 6 vertices a, b, c

This module must not import the spatial index (it is passed in by callers).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Literal, Optional

import numpy as np
import scipy.sparse as sp

from meshvr.core.errors import (
    DegenerateTriangleError,
    EmptyMeshError,
    SceneValidationError,
    Violation,
)

if TYPE_CHECKING:  # pragma: no cover
    from meshvr.spatial.octree import Octree

logger = logging.getLogger(__name__)

_MESH_IDS = itertools.count(1)

AREA_EPS = 1e-12
ZERO_DISTANCE_EPS = 1e-9

REGION_FACE = 0
EDGE_REGIONS = (1, 2, 3)
VERTEX_REGIONS = (4, 5, 6)

# local vertex slots spanned by each edge region
_EDGE_SLOTS = np.array([[0, 1], [1, 2], [2, 0]], dtype=np.int64)

Region = Literal["face", "edge", "vertex"]


def region_name(code: int) -> Region:
    if code == REGION_FACE:
        return "face"
    if code in EDGE_REGIONS:
        return "edge"
    if code in VERTEX_REGIONS:
        return "vertex"
    raise ValueError(f"unknown region code {code}")


# =============================================================================
# Result containers
# =============================================================================


@dataclass(frozen=True)
class ClosestPointResult:
    """Closest point p' on a mesh (or a lone triangle) for one query point.

    `local_index` identifies the active edge (0: ab, 1: bc, 2: ca) or vertex
    (0: a, 1: b, 2: c) inside the face; it is 0 for face-interior results.
    """

    point: np.ndarray
    face_id: int
    barycentric: np.ndarray
    region: Region
    local_index: int
    distance: float
    signed_distance: float

    @property
    def region_code(self) -> int:
        if self.region == "face":
            return REGION_FACE
        if self.region == "edge":
            return EDGE_REGIONS[self.local_index]
        return VERTEX_REGIONS[self.local_index]


@dataclass(frozen=True)
class ClosestPointBatch:
    """Vectorised closest-point results for N queries."""

    point: np.ndarray           # (N,3)
    face_id: np.ndarray         # (N,) int64
    barycentric: np.ndarray     # (N,3)
    region: np.ndarray          # (N,) int8 region codes
    distance: np.ndarray        # (N,)
    signed_distance: np.ndarray  # (N,)
    normal: Optional[np.ndarray] = None  # (N,3) pseudo-normals when signed

    def __len__(self) -> int:
        return int(self.distance.shape[0])

    def item(self, i: int) -> ClosestPointResult:
        code = int(self.region[i])
        if code == REGION_FACE:
            local = 0
        elif code in EDGE_REGIONS:
            local = code - 1
        else:
            local = code - 4
        return ClosestPointResult(
            point=self.point[i].copy(),
            face_id=int(self.face_id[i]),
            barycentric=self.barycentric[i].copy(),
            region=region_name(code),
            local_index=local,
            distance=float(self.distance[i]),
            signed_distance=float(self.signed_distance[i]),
        )


# =============================================================================
# Batched kernel
# =============================================================================


def closest_points_on_triangles(
    p: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Closest points for N (point, triangle) pairs.

    Returns (point (N,3), barycentric (N,3), region (N,) int8, distance (N,)).
    Degenerate triangles are not rejected here; callers validate.
    """
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    in_a = (d1 <= 0.0) & (d2 <= 0.0)
    in_b = (d3 >= 0.0) & (d4 <= d3)
    in_ab = (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0)
    in_c = (d6 >= 0.0) & (d5 <= d6)
    in_ac = (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0)
    in_bc = (va <= 0.0) & ((d4 - d3) >= 0.0) & ((d5 - d6) >= 0.0)

    n = p.shape[0]
    region = np.zeros(n, dtype=np.int8)
    bary = np.zeros((n, 3), dtype=np.float64)
    done = np.zeros(n, dtype=bool)

    with np.errstate(divide="ignore", invalid="ignore"):
        m = in_a & ~done
        region[m] = 4
        bary[m] = (1.0, 0.0, 0.0)
        done |= m

        m = in_b & ~done
        region[m] = 5
        bary[m] = (0.0, 1.0, 0.0)
        done |= m

        m = in_ab & ~done
        v = d1[m] / (d1[m] - d3[m])
        region[m] = 1
        bary[m, 0] = 1.0 - v
        bary[m, 1] = v
        done |= m

        m = in_c & ~done
        region[m] = 6
        bary[m] = (0.0, 0.0, 1.0)
        done |= m

        m = in_ac & ~done
        w = d2[m] / (d2[m] - d6[m])
        region[m] = 3
        bary[m, 0] = 1.0 - w
        bary[m, 2] = w
        done |= m

        m = in_bc & ~done
        w = (d4[m] - d3[m]) / ((d4[m] - d3[m]) + (d5[m] - d6[m]))
        region[m] = 2
        bary[m, 1] = 1.0 - w
        bary[m, 2] = w
        done |= m

        m = ~done
        denom = 1.0 / (va[m] + vb[m] + vc[m])
        v = vb[m] * denom
        w = vc[m] * denom
        region[m] = REGION_FACE
        bary[m, 0] = 1.0 - v - w
        bary[m, 1] = v
        bary[m, 2] = w

    point = bary[:, 0:1] * a + bary[:, 1:2] * b + bary[:, 2:3] * c
    distance = np.linalg.norm(p - point, axis=1)
    return point, bary, region, distance


def _triangle_areas(tris: np.ndarray) -> np.ndarray:
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    out = np.zeros_like(v)
    np.divide(v, norm, out=out, where=norm > 0.0)
    return out


# =============================================================================
# TriangleMesh
# =============================================================================


class TriangleMesh:
    """Fixed-topology triangle mesh with optimisable vertex positions.

    Faces are stored in a read-only array and never change after
    construction. Vertex updates go through `set_vertices`, which bumps
    `revision` so stale spatial indexes can be detected.
    """

    def __init__(self, vertices: Any, faces: Any, *, check_area: bool = True) -> None:
        v = np.array(vertices, dtype=np.float64)
        f = np.array(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise SceneValidationError([Violation("mesh.vertices", f"expected (n_v, 3) array, got {v.shape}")])
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise SceneValidationError([Violation("mesh.faces", f"expected (n_t, 3) array, got {f.shape}")])

        violations: list[Violation] = []
        if f.size and (f.min() < 0 or f.max() >= v.shape[0]):
            bad = np.nonzero(((f < 0) | (f >= v.shape[0])).any(axis=1))[0]
            violations.append(Violation("mesh.faces", f"vertex index out of range in faces {bad[:10].tolist()}"))
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if repeated.any():
            bad = np.nonzero(repeated)[0]
            violations.append(Violation("mesh.faces", f"repeated vertex index in faces {bad[:10].tolist()}"))
        if not np.isfinite(v).all():
            violations.append(Violation("mesh.vertices", "contains non-finite values"))
        if violations:
            raise SceneValidationError(violations)

        self._vertices = v
        self._faces = f
        self._faces.setflags(write=False)
        self._revision = 0
        self._uid = next(_MESH_IDS)
        self._cache: dict[str, Any] = {}
        self._topology_cache: dict[str, Any] = {}

        if check_area and f.shape[0]:
            areas = _triangle_areas(self.triangles())
            bad = np.nonzero(areas <= AREA_EPS)[0]
            if bad.size:
                raise DegenerateTriangleError(f"degenerate faces (area <= {AREA_EPS:g}): {bad[:10].tolist()}")

    # --- basic accessors ---

    @property
    def vertices(self) -> np.ndarray:
        out = self._vertices.view()
        out.setflags(write=False)
        return out

    @property
    def faces(self) -> np.ndarray:
        return self._faces

    @property
    def n_vertices(self) -> int:
        return int(self._vertices.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self._faces.shape[0])

    @property
    def revision(self) -> int:
        return self._revision

    @property
    def uid(self) -> int:
        """Process-unique identity; copies get a new one."""
        return self._uid

    def set_vertices(self, vertices: Any) -> None:
        v = np.array(vertices, dtype=np.float64)
        if v.shape != self._vertices.shape:
            raise ValueError(f"set_vertices: expected shape {self._vertices.shape}, got {v.shape}")
        self._vertices = v
        self._revision += 1
        self._cache.clear()

    def copy(self) -> "TriangleMesh":
        out = TriangleMesh(self._vertices, self._faces, check_area=False)
        out._topology_cache = self._topology_cache
        return out

    def triangles(self, face_ids: Optional[np.ndarray] = None) -> np.ndarray:
        """Triangle corner positions, shape (n, 3, 3)."""
        f = self._faces if face_ids is None else self._faces[face_ids]
        return self._vertices[f]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n_vertices == 0:
            raise EmptyMeshError("mesh has no vertices")
        return self._vertices.min(axis=0), self._vertices.max(axis=0)

    def diagonal(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    # --- topology (cached for the lifetime of the faces) ---

    def edges(self) -> np.ndarray:
        """Unique undirected edges (n_e, 2), rows sorted (i < j)."""
        if "edges" not in self._topology_cache:
            self._build_edge_tables()
        return self._topology_cache["edges"]

    def face_edges(self) -> np.ndarray:
        """Edge id of each face's local edges (ab, bc, ca), shape (n_t, 3)."""
        if "face_edges" not in self._topology_cache:
            self._build_edge_tables()
        return self._topology_cache["face_edges"]

    def _build_edge_tables(self) -> None:
        f = self._faces
        local = f[:, _EDGE_SLOTS]                       # (n_t, 3, 2)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        self._topology_cache["edges"] = edges
        self._topology_cache["face_edges"] = inverse.reshape(-1, 3)

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Symmetric 0/1 vertex adjacency as a sparse matrix."""
        if "adjacency" not in self._topology_cache:
            e = self.edges()
            n = self.n_vertices
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            data = np.ones(rows.shape[0], dtype=np.float64)
            self._topology_cache["adjacency"] = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._topology_cache["adjacency"]

    def neighbors(self, i: int) -> np.ndarray:
        """N(i): sorted neighbour indices of vertex i."""
        adj = self.adjacency_matrix()
        return adj.indices[adj.indptr[i]:adj.indptr[i + 1]].copy()

    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n_vertices)]

    def laplacian_operator(self) -> sp.csr_matrix:
        """Uniform Laplacian L = I - D^-1 A; rows of isolated vertices are zero."""
        if "laplacian" not in self._topology_cache:
            adj = self.adjacency_matrix()
            degree = np.asarray(adj.sum(axis=1)).ravel()
            isolated = degree == 0
            if isolated.any():
                logger.warning(
                    "laplacian: %d isolated vertices get a zero delta: %s",
                    int(isolated.sum()),
                    np.nonzero(isolated)[0][:10].tolist(),
                )
            inv = np.zeros_like(degree)
            inv[~isolated] = 1.0 / degree[~isolated]
            ident = sp.diags((~isolated).astype(np.float64))
            self._topology_cache["laplacian"] = (ident - sp.diags(inv) @ adj).tocsr()
        return self._topology_cache["laplacian"]

    # --- geometry caches (invalidated by set_vertices) ---

    def face_normals(self) -> np.ndarray:
        """Unit face normals following the stored winding; zero for degenerate faces."""
        if "face_normals" not in self._cache:
            tris = self.triangles()
            cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
            self._cache["face_normals"] = _normalize_rows(cross)
        return self._cache["face_normals"]

    def edge_pseudo_normals(self) -> np.ndarray:
        """Per-edge sum of incident face normals, normalised.

        Both incident faces subtend an angle of pi at an edge, so the
        angle-weighted average reduces to a plain sum.
        """
        if "edge_normals" not in self._cache:
            fe = self.face_edges()
            fn = self.face_normals()
            acc = np.zeros((self.edges().shape[0], 3), dtype=np.float64)
            for k in range(3):
                np.add.at(acc, fe[:, k], fn)
            self._cache["edge_normals"] = _normalize_rows(acc)
        return self._cache["edge_normals"]

    def vertex_pseudo_normals(self) -> np.ndarray:
        """Angle-weighted vertex pseudo-normals."""
        if "vertex_normals" not in self._cache:
            tris = self.triangles()
            fn = self.face_normals()
            acc = np.zeros((self.n_vertices, 3), dtype=np.float64)
            for k in range(3):
                e1 = _normalize_rows(tris[:, (k + 1) % 3] - tris[:, k])
                e2 = _normalize_rows(tris[:, (k + 2) % 3] - tris[:, k])
                cosang = np.clip(np.einsum("ij,ij->i", e1, e2), -1.0, 1.0)
                angle = np.arccos(cosang)
                np.add.at(acc, self._faces[:, k], angle[:, None] * fn)
            self._cache["vertex_normals"] = _normalize_rows(acc)
        return self._cache["vertex_normals"]

    def pseudo_normals(self, face_ids: np.ndarray, regions: np.ndarray) -> np.ndarray:
        """Pseudo-normal for each (face, region) pair."""
        face_ids = np.asarray(face_ids, dtype=np.int64)
        regions = np.asarray(regions)
        out = self.face_normals()[face_ids].copy()

        edge_mask = (regions >= 1) & (regions <= 3)
        if edge_mask.any():
            local = regions[edge_mask].astype(np.int64) - 1
            eid = self.face_edges()[face_ids[edge_mask], local]
            out[edge_mask] = self.edge_pseudo_normals()[eid]

        vert_mask = regions >= 4
        if vert_mask.any():
            local = regions[vert_mask].astype(np.int64) - 4
            vid = self._faces[face_ids[vert_mask], local]
            out[vert_mask] = self.vertex_pseudo_normals()[vid]
        return out

    def faces_bytes(self) -> bytes:
        return self._faces.tobytes()

    def __repr__(self) -> str:
        return f"TriangleMesh(n_v={self.n_vertices}, n_t={self.n_faces}, revision={self._revision})"


# =============================================================================
# Scalar operations
# =============================================================================


def closest_point_on_triangle(p: Any, a: Any, b: Any, c: Any) -> ClosestPointResult:
    """Exact closest point on the closed triangle (a, b, c) to p (unsigned)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    area = 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))
    if area <= AREA_EPS:
        raise DegenerateTriangleError(f"degenerate triangle (area {area:g} <= {AREA_EPS:g})")
    point, bary, region, dist = closest_points_on_triangles(
        np.asarray(p, dtype=np.float64)[None, :], a[None, :], b[None, :], c[None, :]
    )
    batch = ClosestPointBatch(
        point=point,
        face_id=np.array([-1], dtype=np.int64),
        barycentric=bary,
        region=region,
        distance=dist,
        signed_distance=dist.copy(),
    )
    return batch.item(0)


def face_normal(mesh: TriangleMesh, face_id: int) -> np.ndarray:
    tri = mesh.triangles(np.array([face_id]))[0]
    cross = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    norm = float(np.linalg.norm(cross))
    if 0.5 * norm <= AREA_EPS:
        raise DegenerateTriangleError(f"face {face_id} is degenerate")
    return cross / norm


def pseudo_normal(mesh: TriangleMesh, closest: ClosestPointResult) -> np.ndarray:
    return mesh.pseudo_normals(np.array([closest.face_id]), np.array([closest.region_code]))[0]


def apply_pseudo_sign(mesh: TriangleMesh, points: np.ndarray, batch: ClosestPointBatch) -> ClosestPointBatch:
    """Attach pseudo-normals and signs (0 counts as +) to an unsigned batch."""
    normals = mesh.pseudo_normals(batch.face_id, batch.region)
    side = np.einsum("ij,ij->i", np.asarray(points, dtype=np.float64) - batch.point, normals)
    sign = np.where(side < 0.0, -1.0, 1.0)
    return ClosestPointBatch(
        point=batch.point,
        face_id=batch.face_id,
        barycentric=batch.barycentric,
        region=batch.region,
        distance=batch.distance,
        signed_distance=sign * batch.distance,
        normal=normals,
    )


def signed_distances(mesh: TriangleMesh, index: "Octree", points: Any) -> ClosestPointBatch:
    """Pseudo-signed distance for an (N,3) array of points."""
    if mesh.n_faces == 0:
        raise EmptyMeshError("signed_distance: mesh has no faces")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    batch = index.nearest_triangles(mesh, pts)
    return apply_pseudo_sign(mesh, pts, batch)


def signed_distance(mesh: TriangleMesh, index: "Octree", p: Any) -> ClosestPointResult:
    return signed_distances(mesh, index, np.asarray(p, dtype=np.float64)[None, :]).item(0)


@dataclass(frozen=True)
class DistanceJacobians:
    d_point: np.ndarray        # (3,)
    d_vertices: np.ndarray     # (3,3) rows are dd/da, dd/db, dd/dc
    zero_distance: bool


def closest_point_jacobians(p: Any, tri: Any, result: ClosestPointResult) -> DistanceJacobians:
    """Gradients of the unsigned distance w.r.t. the query and the triangle corners.

    The active region is held fixed; at d ~ 0 the zero subgradient is returned
    and flagged.
    """
    p = np.asarray(p, dtype=np.float64)
    if result.distance <= ZERO_DISTANCE_EPS:
        return DistanceJacobians(np.zeros(3), np.zeros((3, 3)), True)
    d_point = (p - result.point) / result.distance
    d_vertices = -result.barycentric[:, None] * d_point[None, :]
    return DistanceJacobians(d_point, d_vertices, False)


def distance_vertex_vjp(
    mesh: TriangleMesh,
    points: np.ndarray,
    batch: ClosestPointBatch,
    grad_signed: np.ndarray,
) -> np.ndarray:
    """Scatter dL/ds for signed distances into a (n_v, 3) vertex gradient.

    Sign, nearest face and region are treated as locally constant.
    """
    grad_v = np.zeros((mesh.n_vertices, 3), dtype=np.float64)
    d = batch.distance
    ok = d > ZERO_DISTANCE_EPS
    if not ok.any():
        return grad_v
    sign = np.where(batch.signed_distance < 0.0, -1.0, 1.0)
    unit = np.zeros_like(batch.point)
    unit[ok] = (points[ok] - batch.point[ok]) / d[ok, None]
    coeff = (grad_signed * sign)[:, None] * unit               # dL/d(distance) * dd/dp
    corners = mesh.faces[batch.face_id]                        # (N,3)
    for k in range(3):
        np.add.at(grad_v, corners[ok, k], -batch.barycentric[ok, k, None] * coeff[ok])
    return grad_v


def laplacian_deltas(mesh: TriangleMesh) -> np.ndarray:
    """delta_i = v_i - mean of N(i); zero for isolated vertices."""
    return np.asarray(mesh.laplacian_operator() @ mesh.vertices)


__all__ = [
    "AREA_EPS",
    "ClosestPointBatch",
    "ClosestPointResult",
    "DistanceJacobians",
    "REGION_FACE",
    "TriangleMesh",
    "apply_pseudo_sign",
    "closest_point_jacobians",
    "closest_point_on_triangle",
    "closest_points_on_triangles",
    "distance_vertex_vjp",
    "face_normal",
    "laplacian_deltas",
    "pseudo_normal",
    "region_name",
    "signed_distance",
    "signed_distances",
]
