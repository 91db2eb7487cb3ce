"""meshvr bundle I/O (scene-on-disk format and checkpoints).

- `scene.json` manifest with sha256 provenance for every referenced file
- OBJ meshes, binary PPM/PGM (or PNG) images and masks, landmark CSV
- checkpoints: versioned header + named little-endian float arrays
"""

from __future__ import annotations

from .checkpoint import read_checkpoint, write_checkpoint
from .mesh_io import read_obj, write_obj
from .scene import SceneBundle, View, load_scene, save_scene, select_front_views

__all__ = [
    "SceneBundle",
    "View",
    "load_scene",
    "read_checkpoint",
    "read_obj",
    "save_scene",
    "select_front_views",
    "write_checkpoint",
    "write_obj",
]
