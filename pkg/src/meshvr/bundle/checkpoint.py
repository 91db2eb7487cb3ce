"""Checkpoint files: named little-endian float arrays behind a JSON header.

Layout:

    b"MVRCKPT1"                  magic
    uint32 (little-endian)       header length in bytes
    header                       UTF-8 JSON: format_version, metadata, arrays
    array payloads               raw little-endian data, in header order

`arrays` is a list of {name, shape, dtype, offset, nbytes}; offsets are
relative to the end of the header. Exported models use "<f4"; resume
checkpoints use "<f8".
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np

MAGIC = b"MVRCKPT1"
FORMAT_VERSION = 1
SUPPORTED_DTYPES = ("<f4", "<f8")


def encode_checkpoint(arrays: Mapping[str, Any], metadata: Mapping[str, Any], *, dtype: str = "<f4") -> bytes:
    if dtype not in SUPPORTED_DTYPES:
        raise ValueError(f"checkpoint dtype must be one of {SUPPORTED_DTYPES}, got {dtype!r}")
    table: list[dict[str, Any]] = []
    payloads: list[bytes] = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(np.asarray(arrays[name], dtype=np.float64).astype(dtype))
        raw = arr.tobytes()
        table.append({"name": name, "shape": list(arr.shape), "dtype": dtype, "offset": offset, "nbytes": len(raw)})
        payloads.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "metadata": dict(metadata), "arrays": table},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header)) + header + b"".join(payloads)


def decode_checkpoint(data: bytes, *, source: str = "<checkpoint>") -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{source}: not a meshvr checkpoint (bad magic)")
    if len(data) < len(MAGIC) + 4:
        raise ValueError(f"{source}: truncated header")
    (hlen,) = struct.unpack("<I", data[len(MAGIC): len(MAGIC) + 4])
    start = len(MAGIC) + 4
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"{source}: corrupt header ({e})") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{source}: unsupported checkpoint format_version {header.get('format_version')!r}")
    base = start + hlen
    arrays: dict[str, np.ndarray] = {}
    for entry in header.get("arrays", []):
        dtype = entry["dtype"]
        if dtype not in SUPPORTED_DTYPES:
            raise ValueError(f"{source}: array {entry['name']!r} has unsupported dtype {dtype!r}")
        lo = base + int(entry["offset"])
        hi = lo + int(entry["nbytes"])
        if hi > len(data):
            raise ValueError(f"{source}: array {entry['name']!r} runs past end of file")
        arr = np.frombuffer(data[lo:hi], dtype=np.dtype(dtype)).astype(np.float64)
        arrays[entry["name"]] = arr.reshape(entry["shape"])
    return arrays, dict(header.get("metadata", {}))


def write_checkpoint(path: Path, arrays: Mapping[str, Any], metadata: Mapping[str, Any], *, dtype: str = "<f4") -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(encode_checkpoint(arrays, metadata, dtype=dtype))


def read_checkpoint(path: Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"checkpoint not found: {p}")
    return decode_checkpoint(p.read_bytes(), source=str(p))


__all__ = ["MAGIC", "decode_checkpoint", "encode_checkpoint", "read_checkpoint", "write_checkpoint"]
