"""Wavefront OBJ reading (fan-triangulated) and writing."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from meshvr.core.mesh import TriangleMesh

_IGNORED = {"vt", "vn", "vp", "o", "g", "s", "usemtl", "mtllib", "l"}


def _face_index(token: str, n_v: int, where: str) -> int:
    head = token.split("/", 1)[0]
    try:
        k = int(head)
    except ValueError:
        raise ValueError(f"{where}: bad face index {token!r}") from None
    if k == 0:
        raise ValueError(f"{where}: OBJ indices are 1-based, got 0")
    idx = k - 1 if k > 0 else n_v + k
    if not 0 <= idx < n_v:
        raise ValueError(f"{where}: face index {k} refers to a vertex not yet defined")
    return idx


def parse_obj(text: str, *, source: str = "<obj>") -> tuple[np.ndarray, np.ndarray]:
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag, args = parts[0], parts[1:]
        where = f"{source}:{lineno}"
        if tag == "v":
            if len(args) < 3:
                raise ValueError(f"{where}: vertex needs 3 coordinates")
            try:
                verts.append((float(args[0]), float(args[1]), float(args[2])))
            except ValueError:
                raise ValueError(f"{where}: bad vertex coordinates {args[:3]}") from None
        elif tag == "f":
            if len(args) < 3:
                raise ValueError(f"{where}: face needs at least 3 vertices, got {len(args)}")
            idx = [_face_index(tok, len(verts), where) for tok in args]
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        elif tag in _IGNORED:
            continue
        else:
            raise ValueError(f"{where}: unsupported OBJ statement {tag!r}")
    v = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    return v, f


def read_obj(path: Path) -> TriangleMesh:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"mesh file not found: {p}")
    v, f = parse_obj(p.read_text(encoding="utf-8"), source=str(p))
    if f.shape[0] == 0:
        raise ValueError(f"{p}: no faces")
    return TriangleMesh(v, f)


def format_obj(vertices: np.ndarray, faces: np.ndarray, *, header: str = "") -> str:
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in np.asarray(vertices, dtype=np.float64)]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(faces, dtype=np.int64)]
    return "\n".join(lines) + "\n"


def write_obj(path: Path, mesh: TriangleMesh, *, header: str = "") -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="\n") as f:
        f.write(format_obj(mesh.vertices, mesh.faces, header=header))


__all__ = ["format_obj", "parse_obj", "read_obj", "write_obj"]
