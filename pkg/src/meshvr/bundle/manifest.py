"""Scene manifest (`scene.json`) construction, hashing and verification.

Schema meshvr-scene-1 holds:
- name, template mesh path, scale hint, held-out view ids
- views: id, camera (K, R, t, width, height), image and mask paths
- optional landmarks path and synthetic `fixture` block
- `sources`: one {path, sha256} record per referenced file

JSON is written with sorted keys, 2-space indent and a trailing newline.
`created_utc` appears only when the caller passes one.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Optional

SCHEMA_VERSION = "meshvr-scene-1"

_CHUNK = 1 << 20


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        while chunk := fh.read(_CHUNK):
            digest.update(chunk)
    return digest.hexdigest()


def write_json_stable(path: Path, obj: Any) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes((json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def read_manifest(path: Path) -> dict[str, Any]:
    p = Path(path)
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"{p}: not valid JSON ({e})") from e
    if not isinstance(obj, dict):
        raise ValueError(f"{p}: top level must be a JSON object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{p}: unsupported schema_version {obj.get('schema_version')!r} (expected {SCHEMA_VERSION})")
    return obj


def write_manifest(path: Path, manifest: dict[str, Any]) -> None:
    write_json_stable(path, manifest)


def build_manifest(
    *,
    name: str,
    template: str,
    views: list[dict[str, Any]],
    sources: list[dict[str, Any]],
    landmarks: Optional[str] = None,
    scale_hint: float = 1.0,
    holdout: Optional[list[int]] = None,
    fixture: Optional[dict[str, Any]] = None,
    created_utc: Optional[str] = None,
) -> dict[str, Any]:
    name = name.strip() if isinstance(name, str) else ""
    if not name:
        raise ValueError("manifest: scene name must be a non-empty string")
    if not template:
        raise ValueError("manifest: template path is empty")
    if not scale_hint > 0.0:
        raise ValueError(f"manifest: scale_hint must be > 0, got {scale_hint}")

    optional = {"landmarks": landmarks, "fixture": fixture, "created_utc": created_utc}
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "template": template,
        "views": list(views),
        "sources": list(sources),
        "scale_hint": float(scale_hint),
        "holdout": sorted(int(v) for v in (holdout or [])),
        "color_space": "linear",
        **{k: v for k, v in optional.items() if v is not None},
    }


def source_record(root: Path, rel: str) -> dict[str, str]:
    return {"path": rel, "sha256": sha256_file(Path(root) / rel)}


def verify_sources(root: Path, manifest: dict[str, Any]) -> None:
    """Re-hash every file listed in `sources`; the first mismatch raises."""
    sources = manifest.get("sources", [])
    if not isinstance(sources, list):
        raise ValueError("scene.json: sources must be an array")
    for i, item in enumerate(sources):
        rel = item.get("path") if isinstance(item, dict) else None
        expected = item.get("sha256") if isinstance(item, dict) else None
        if not isinstance(rel, str) or not isinstance(expected, str):
            raise ValueError(f"scene.json: sources[{i}] needs string 'path' and 'sha256'")
        actual = sha256_file(Path(root) / rel)
        if actual != expected:
            raise ValueError(f"sha256 mismatch for {rel}: expected {expected}, got {actual}")
