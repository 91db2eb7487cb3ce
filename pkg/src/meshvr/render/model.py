"""The renderable state: mesh + spatial index + appearance + density mapping.

`RenderModel` is the bridge between the flat `ParamStore` used by the
optimiser and the structured objects the renderer reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from meshvr.appearance.decoder import DECODER_PARAM_NAMES, MlpDecoder
from meshvr.appearance.encoding import PositionalEncoding
from meshvr.appearance.triplanes import PLANE_NAMES, TriPlanes
from meshvr.core.mesh import TriangleMesh
from meshvr.optim.params import SCALE, VERTICES, ParamStore
from meshvr.render.density import DensityMapping, DensityMode
from meshvr.spatial.octree import Octree, OctreeParams, build


@dataclass
class RenderModel:
    mesh: TriangleMesh
    planes: TriPlanes
    decoder: MlpDecoder
    density: DensityMapping
    encoding: PositionalEncoding = field(default_factory=PositionalEncoding)
    octree_params: OctreeParams = field(default_factory=OctreeParams)
    _octree: Optional[Octree] = field(default=None, repr=False)

    @classmethod
    def create(
        cls,
        mesh: TriangleMesh,
        *,
        scale: Optional[float] = None,
        mode: DensityMode = "signed",
        resolution: int = 64,
        dims: tuple[int, int, int] = (32, 16, 16),
        hidden: int = 64,
        bands: int = 4,
        plane_margin: float = 0.1,
        octree_params: Optional[OctreeParams] = None,
        seed: int = 0,
    ) -> "RenderModel":
        """Fresh appearance parameters around `mesh`; s defaults to 30 / bbox diagonal."""
        rng = np.random.default_rng([seed, 0x7E])
        lo, hi = mesh.bounds()
        planes = TriPlanes.enclosing(lo, hi, margin=plane_margin, resolution=resolution, dims=dims, rng=rng)
        encoding = PositionalEncoding(bands)
        decoder = MlpDecoder.create(planes.feature_dim + encoding.dim, hidden=hidden, rng=rng)
        s = scale if scale is not None else 30.0 / max(mesh.diagonal(), 1e-12)
        return cls(
            mesh=mesh,
            planes=planes,
            decoder=decoder,
            density=DensityMapping(float(s), mode),
            encoding=encoding,
            octree_params=octree_params or OctreeParams(),
        )

    @property
    def octree(self) -> Octree:
        """Spatial index over the current vertices, rebuilt when stale."""
        tree = self._octree
        if tree is None or tree.mesh_uid != self.mesh.uid or tree.revision != self.mesh.revision:
            tree = build(self.mesh, self.octree_params)
            self._octree = tree
        return tree

    def to_params(self) -> ParamStore:
        store = ParamStore()
        store.add(VERTICES, self.mesh.vertices)
        for name in PLANE_NAMES:
            store.add(f"planes.{name}", self.planes.plane(name))
        for name in DECODER_PARAM_NAMES:
            store.add(f"decoder.{name}", getattr(self.decoder, name))
        store.add(SCALE, np.array([self.density.scale]))
        return store

    def with_params(self, params: ParamStore) -> "RenderModel":
        """A model reading `params`; the mesh (and its index) is shared when vertices are unchanged."""
        verts = params[VERTICES]
        if np.array_equal(verts, self.mesh.vertices):
            mesh, tree = self.mesh, self._octree
        else:
            mesh = TriangleMesh(verts, self.mesh.faces, check_area=False)
            tree = None
        planes = TriPlanes(
            params["planes.xy"].copy(),
            params["planes.xz"].copy(),
            params["planes.yz"].copy(),
            self.planes.bounds_min,
            self.planes.bounds_max,
        )
        decoder = MlpDecoder(*(params[f"decoder.{n}"].copy() for n in DECODER_PARAM_NAMES))
        density = self.density.with_scale(float(params[SCALE][0]))
        return RenderModel(mesh, planes, decoder, density, self.encoding, self.octree_params, tree)

    def load_params(self, params: ParamStore) -> None:
        """In-place update; vertices are written (and the index invalidated) only if they changed."""
        verts = params[VERTICES]
        if not np.array_equal(verts, self.mesh.vertices):
            self.mesh.set_vertices(verts)
        for name in PLANE_NAMES:
            setattr(self.planes, name, params[f"planes.{name}"].copy())
        for name in DECODER_PARAM_NAMES:
            setattr(self.decoder, name, params[f"decoder.{name}"].copy())
        self.density = self.density.with_scale(float(params[SCALE][0]))


__all__ = ["RenderModel"]
