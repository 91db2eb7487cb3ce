"""meshvr: topology-preserving mesh reconstruction by mesh volume rendering.

A fixed-topology template mesh is fitted to multi-view images by rendering a
density field derived from point-to-mesh distances, with a tri-plane
appearance field, and optimising vertex positions by gradient descent.
"""

from __future__ import annotations

from meshvr.core import TriangleMesh
from meshvr.bundle import SceneBundle, load_scene

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SceneBundle",
    "TriangleMesh",
    "load_scene",
]
