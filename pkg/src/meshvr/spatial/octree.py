"""Octree over mesh triangles.

Nodes live in flat arrays; the eight children of a split node are stored
contiguously in octant order (bit 0: x, bit 1: y, bit 2: z). Leaves keep
their triangle ids in a CSR layout (`leaf_start`, `leaf_count`, `leaf_tris`).

Nearest-triangle queries run a level-synchronous traversal over arrays of
(query, node) pairs, pruned by the current best distance. The initial bound
comes from the triangle whose centroid is nearest (cKDTree), so pruning is
effective from the first level.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.spatial import cKDTree

from meshvr.core.errors import EmptyMeshError, StaleIndexError
from meshvr.core.mesh import (
    ClosestPointBatch,
    ClosestPointResult,
    TriangleMesh,
    closest_points_on_triangles,
)
from meshvr.spatial.overlap import point_box_distance, ray_box_slabs, triangles_overlap_box

logger = logging.getLogger(__name__)

_QUERY_CHUNK = 8192
_RAY_CHUNK = 1024


@dataclass(frozen=True)
class OctreeParams:
    max_depth: int = 10
    max_leaf_triangles: int = 16
    margin: float = 0.05

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.max_leaf_triangles < 1:
            raise ValueError("max_leaf_triangles must be >= 1")
        if self.margin < 0.0:
            raise ValueError("margin must be >= 0")


@dataclass
class Octree:
    box_min: np.ndarray          # (n_nodes, 3)
    box_max: np.ndarray          # (n_nodes, 3)
    first_child: np.ndarray      # (n_nodes,) -1 for leaves
    depth: np.ndarray            # (n_nodes,)
    leaf_start: np.ndarray       # (n_nodes,)
    leaf_count: np.ndarray       # (n_nodes,)
    leaf_tris: np.ndarray        # flat triangle ids
    params: OctreeParams
    revision: int
    mesh_uid: int
    n_faces: int
    _triangles: np.ndarray = field(repr=False)
    _centroid_tree: Any = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return int(self.first_child.shape[0])

    @property
    def root_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.box_min[0], self.box_max[0]

    def is_leaf(self) -> np.ndarray:
        return self.first_child < 0

    def leaf_triangles(self, node: int) -> np.ndarray:
        s = int(self.leaf_start[node])
        return self.leaf_tris[s:s + int(self.leaf_count[node])]

    def check_current(self, mesh: TriangleMesh) -> None:
        if mesh.uid != self.mesh_uid or mesh.revision != self.revision or mesh.n_faces != self.n_faces:
            raise StaleIndexError(
                f"octree built for vertex revision {self.revision}, mesh is at revision {mesh.revision}"
            )

    # --- queries ---

    def nearest_triangles(
        self,
        mesh: TriangleMesh,
        points: Any,
        upper_bound: Optional[float] = None,
    ) -> ClosestPointBatch:
        """Unsigned nearest-triangle results for (N,3) points.

        With `upper_bound`, queries with no triangle within the bound get
        face_id -1 and distance inf.
        """
        self.check_current(mesh)
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        parts = [self._nearest_chunk(pts[s:s + _QUERY_CHUNK], upper_bound) for s in range(0, pts.shape[0], _QUERY_CHUNK)]
        if not parts:
            empty3 = np.zeros((0, 3))
            return ClosestPointBatch(empty3, np.zeros(0, np.int64), empty3, np.zeros(0, np.int8), np.zeros(0), np.zeros(0))
        return ClosestPointBatch(
            point=np.concatenate([p.point for p in parts]),
            face_id=np.concatenate([p.face_id for p in parts]),
            barycentric=np.concatenate([p.barycentric for p in parts]),
            region=np.concatenate([p.region for p in parts]),
            distance=np.concatenate([p.distance for p in parts]),
            signed_distance=np.concatenate([p.signed_distance for p in parts]),
        )

    def _nearest_chunk(self, pts: np.ndarray, upper_bound: Optional[float]) -> ClosestPointBatch:
        n = pts.shape[0]
        tris = self._triangles

        _, seed = self._centroid_tree.query(pts, k=1)
        seed = np.asarray(seed, dtype=np.int64)
        point, bary, region, dist = closest_points_on_triangles(pts, tris[seed, 0], tris[seed, 1], tris[seed, 2])
        face = seed.copy()

        if upper_bound is not None:
            outside = dist > upper_bound
            dist = np.where(outside, np.inf, dist)
            face[outside] = -1
            bound = np.where(outside, float(upper_bound), dist)
        else:
            bound = dist.copy()

        q = np.arange(n, dtype=np.int64)
        node = np.zeros(n, dtype=np.int64)
        while q.size:
            gap = point_box_distance(pts[q], self.box_min[node], self.box_max[node])
            keep = gap <= bound[q]
            q, node = q[keep], node[keep]
            if not q.size:
                break

            leaf = self.first_child[node] < 0
            lq, lnode = q[leaf], node[leaf]
            if lq.size:
                counts = self.leaf_count[lnode]
                pq = np.repeat(lq, counts)
                offsets = np.repeat(self.leaf_start[lnode] - np.cumsum(counts) + counts, counts)
                tri_ids = self.leaf_tris[offsets + np.arange(pq.size)]
                if pq.size:
                    cp, cb, cr, cd = closest_points_on_triangles(
                        pts[pq], tris[tri_ids, 0], tris[tri_ids, 1], tris[tri_ids, 2]
                    )
                    order = np.lexsort((tri_ids, cd, pq))
                    pq_sorted = pq[order]
                    first = np.ones(order.size, dtype=bool)
                    first[1:] = pq_sorted[1:] != pq_sorted[:-1]
                    win = order[first]
                    wq = pq[win]
                    better = (cd[win] < dist[wq]) | ((cd[win] == dist[wq]) & (tri_ids[win] < face[wq]) & (face[wq] >= 0))
                    if upper_bound is not None:
                        better &= cd[win] <= upper_bound
                    win, wq = win[better], wq[better]
                    dist[wq] = cd[win]
                    face[wq] = tri_ids[win]
                    point[wq] = cp[win]
                    bary[wq] = cb[win]
                    region[wq] = cr[win]
                    bound[wq] = np.minimum(bound[wq], cd[win])

            iq, inode = q[~leaf], node[~leaf]
            q = np.repeat(iq, 8)
            node = (np.repeat(self.first_child[inode], 8) + np.tile(np.arange(8), inode.size)).astype(np.int64)

        return ClosestPointBatch(
            point=point,
            face_id=face,
            barycentric=bary,
            region=region,
            distance=dist,
            signed_distance=dist.copy(),
        )

    def active_intervals(
        self,
        origin: Any,
        dirs: Any,
        band: float,
        *,
        merge_gap: float = 0.0,
        t_min: float = 0.0,
    ) -> list[np.ndarray]:
        """Per ray, sorted disjoint [t_near, t_far] intervals covering the band.

        Non-empty leaves expanded by `band` cover every point within `band`
        of the mesh, so the intervals are conservative.
        """
        if band <= 0.0:
            raise ValueError(f"band must be > 0, got {band}")
        d = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        o = np.asarray(origin, dtype=np.float64).reshape(3)
        occupied = np.nonzero((self.first_child < 0) & (self.leaf_count > 0))[0]
        lo = self.box_min[occupied] - band
        hi = self.box_max[occupied] + band
        root_lo = (self.box_min[0] - band)[None, :]
        root_hi = (self.box_max[0] + band)[None, :]

        out: list[np.ndarray] = []
        for s in range(0, d.shape[0], _RAY_CHUNK):
            dc = d[s:s + _RAY_CHUNK]
            rn, rf = ray_box_slabs(o, dc, root_lo, root_hi)
            hits_root = (rn[:, 0] <= rf[:, 0]) & (rf[:, 0] >= t_min)
            tn, tf = ray_box_slabs(o, dc, lo, hi)
            tn = np.maximum(tn, t_min)
            hit = tn <= tf
            for r in range(dc.shape[0]):
                if not hits_root[r]:
                    out.append(np.zeros((0, 2)))
                    continue
                out.append(_merge_intervals(tn[r, hit[r]], tf[r, hit[r]], merge_gap))
        return out


def _merge_intervals(t_near: np.ndarray, t_far: np.ndarray, merge_gap: float) -> np.ndarray:
    keep = t_far > t_near
    t_near, t_far = t_near[keep], t_far[keep]
    if t_near.size == 0:
        return np.zeros((0, 2))
    order = np.lexsort((t_far, t_near))
    tn, tf = t_near[order], t_far[order]
    merged: list[list[float]] = [[float(tn[0]), float(tf[0])]]
    for a, b in zip(tn[1:], tf[1:]):
        cur = merged[-1]
        if a - cur[1] < merge_gap or a <= cur[1]:
            cur[1] = max(cur[1], float(b))
        else:
            merged.append([float(a), float(b)])
    return np.asarray(merged, dtype=np.float64)


def _cube_root_bounds(mesh: TriangleMesh, margin: float) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = mesh.bounds()
    center = 0.5 * (lo + hi)
    half = 0.5 * float((hi - lo).max())
    half = half * (1.0 + margin) + 1e-9 * (1.0 + float(np.abs(center).max()))
    return center - half, center + half


def build(mesh: TriangleMesh, params: Optional[OctreeParams] = None) -> Octree:
    """Build an octree over the mesh's current vertices (deterministic)."""
    params = params or OctreeParams()
    if mesh.n_faces == 0:
        raise EmptyMeshError("octree build: mesh has no faces")
    tris = mesh.triangles()
    root_lo, root_hi = _cube_root_bounds(mesh, params.margin)

    box_min: list[np.ndarray] = [root_lo]
    box_max: list[np.ndarray] = [root_hi]
    depth: list[int] = [0]
    first_child: list[int] = [-1]
    members: dict[int, np.ndarray] = {0: np.arange(mesh.n_faces, dtype=np.int64)}

    queue: deque[int] = deque([0])
    while queue:
        nid = queue.popleft()
        ids = members[nid]
        if ids.size <= params.max_leaf_triangles or depth[nid] >= params.max_depth:
            continue
        lo, hi = box_min[nid], box_max[nid]
        mid = 0.5 * (lo + hi)
        first_child[nid] = len(box_min)
        for octant in range(8):
            bits = np.array([(octant >> k) & 1 for k in range(3)], dtype=bool)
            clo = np.where(bits, mid, lo)
            chi = np.where(bits, hi, mid)
            inside = triangles_overlap_box(tris[ids], clo, chi)
            cid = len(box_min)
            box_min.append(clo)
            box_max.append(chi)
            depth.append(depth[nid] + 1)
            first_child.append(-1)
            members[cid] = ids[inside]
            queue.append(cid)
        del members[nid]

    n_nodes = len(box_min)
    leaf_start = np.zeros(n_nodes, dtype=np.int64)
    leaf_count = np.zeros(n_nodes, dtype=np.int64)
    chunks: list[np.ndarray] = []
    offset = 0
    for nid in range(n_nodes):
        if first_child[nid] >= 0:
            continue
        ids = members.get(nid, np.zeros(0, dtype=np.int64))
        leaf_start[nid] = offset
        leaf_count[nid] = ids.size
        chunks.append(ids)
        offset += ids.size

    centroids = tris.mean(axis=1)
    tree = Octree(
        box_min=np.asarray(box_min),
        box_max=np.asarray(box_max),
        first_child=np.asarray(first_child, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
        leaf_start=leaf_start,
        leaf_count=leaf_count,
        leaf_tris=np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64),
        params=params,
        revision=mesh.revision,
        mesh_uid=mesh.uid,
        n_faces=mesh.n_faces,
        _triangles=tris.copy(),
        _centroid_tree=cKDTree(centroids),
    )
    logger.debug("octree: %d nodes, %d leaf entries for %d faces", tree.n_nodes, offset, mesh.n_faces)
    return tree


def nearest_triangle(
    octree: Octree,
    mesh: TriangleMesh,
    p: Any,
    upper_bound: Optional[float] = None,
) -> Optional[ClosestPointResult]:
    """Closest point on the mesh; None when nothing lies within `upper_bound`."""
    batch = octree.nearest_triangles(mesh, np.asarray(p, dtype=np.float64)[None, :], upper_bound)
    if batch.face_id[0] < 0:
        return None
    return batch.item(0)


def ray_active_intervals(
    octree: Octree,
    ray: tuple[Any, Any],
    band: float,
    *,
    merge_gap: float = 0.0,
) -> np.ndarray:
    """Active [t_near, t_far] intervals (k,2) for one (origin, direction) ray."""
    origin, direction = ray
    return octree.active_intervals(origin, np.asarray(direction, dtype=np.float64)[None, :], band, merge_gap=merge_gap)[0]


def brute_force_nearest(mesh: TriangleMesh, points: Any) -> ClosestPointBatch:
    """Reference scan over every triangle (used as a test oracle and fallback)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    tris = mesh.triangles()
    n, m = pts.shape[0], tris.shape[0]
    if m == 0:
        raise EmptyMeshError("brute_force_nearest: mesh has no faces")
    pq = np.repeat(np.arange(n), m)
    tq = np.tile(np.arange(m), n)
    cp, cb, cr, cd = closest_points_on_triangles(pts[pq], tris[tq, 0], tris[tq, 1], tris[tq, 2])
    best = cd.reshape(n, m).argmin(axis=1)
    sel = np.arange(n) * m + best
    return ClosestPointBatch(
        point=cp[sel],
        face_id=best.astype(np.int64),
        barycentric=cb[sel],
        region=cr[sel],
        distance=cd[sel],
        signed_distance=cd[sel].copy(),
    )


__all__ = [
    "Octree",
    "OctreeParams",
    "brute_force_nearest",
    "build",
    "nearest_triangle",
    "ray_active_intervals",
]
