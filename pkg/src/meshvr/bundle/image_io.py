"""Raster I/O: binary PPM/PGM (8- or 16-bit) and PNG via Pillow.

Values are linear light in [0, 1]; no gamma is applied on read or write.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

_NETPBM = {".ppm": b"P6", ".pgm": b"P5"}


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def read_netpbm(path: Path) -> np.ndarray:
    """P6 -> (H, W, 3), P5 -> (H, W); float64 in [0, 1]."""
    p = Path(path)
    data = p.read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{p}: not a binary PGM/PPM (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ValueError(f"{p}: malformed header token {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ValueError(f"{p}: bad header (width={width}, height={height}, maxval={maxval})")
    pos += 1  # single whitespace byte after maxval
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    need = count * dtype.itemsize
    if len(data) - pos < need:
        raise ValueError(f"{p}: truncated pixel data ({len(data) - pos} of {need} bytes)")
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.float64) / maxval
    return arr.reshape(height, width, 3) if channels == 3 else arr.reshape(height, width)


def write_netpbm(path: Path, image: Any, *, bits: int = 8) -> None:
    p = Path(path)
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    elif img.ndim == 2:
        magic = b"P5"
    else:
        raise ValueError(f"write_netpbm: expected (H, W) or (H, W, 3) image, got {img.shape}")
    if bits not in (8, 16):
        raise ValueError(f"write_netpbm: bits must be 8 or 16, got {bits}")
    maxval = 255 if bits == 8 else 65535
    dtype = np.dtype("u1") if bits == 8 else np.dtype(">u2")
    body = np.round(img * maxval).astype(dtype).tobytes()
    header = magic + f"\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii")
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(header + body)


def read_png(path: Path) -> np.ndarray:
    with Image.open(Path(path)) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            return np.asarray(im, dtype=np.float64) / 65535.0
        if im.mode in ("L", "1"):
            return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def write_png(path: Path, image: Any) -> None:
    p = Path(path)
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    arr = np.round(img * 255.0).astype(np.uint8)
    p.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(p, format="PNG")


def read_image(path: Path) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"image file not found: {p}")
    ext = p.suffix.lower()
    if ext in _NETPBM:
        return read_netpbm(p)
    if ext == ".png":
        return read_png(p)
    raise ValueError(f"{p}: unsupported image format {ext!r}")


def write_image(path: Path, image: Any, *, bits: int = 8) -> None:
    p = Path(path)
    ext = p.suffix.lower()
    if ext in _NETPBM:
        write_netpbm(p, image, bits=bits)
    elif ext == ".png":
        write_png(p, image)
    else:
        raise ValueError(f"{p}: unsupported image format {ext!r}")


__all__ = ["read_image", "read_netpbm", "read_png", "write_image", "write_netpbm", "write_png"]
