"""Reader/writer for the qushk raster layout.

This package exchanges data with the qushk toolkit purely through its
file format, so the 16-byte header (magic ``QUSR``, version and dtype as
u16, rows and cols as u32, all little-endian), the row-major float32
payload, and the ``<file>.json`` metadata sidecar are reimplemented here
rather than imported. Sidecars are written with sorted keys and no
timestamps; a missing sidecar reads as an envelope raster with unit
spacing.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"QUSR"
VERSION = 1
DTYPE_F32 = 1
HEADER = struct.Struct("<4sHHII")

KINDS = ("envelope", "rf", "density", "parametric", "uncertainty")


class RasterFormatError(ValueError):
    """File does not follow the raster layout."""


@dataclass(frozen=True)
class Raster:
    data: np.ndarray
    kind: str = "envelope"
    spacing: tuple[float, float] = (1.0, 1.0)
    provenance: dict = field(default_factory=dict)


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def read_raster(path) -> Raster:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise RasterFormatError(f"{path}: header too short ({len(raw)} bytes)")
    magic, version, dtype, rows, cols = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise RasterFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise RasterFormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise RasterFormatError(f"{path}: unsupported dtype code {dtype}")
    if rows == 0 or cols == 0:
        raise RasterFormatError(f"{path}: zero-sized dims {rows}x{cols}")
    expected = HEADER.size + rows * cols * 4
    if len(raw) != expected:
        raise RasterFormatError(
            f"{path}: payload is {len(raw) - HEADER.size} bytes, "
            f"expected {expected - HEADER.size}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(rows, cols)
    data.flags.writeable = False

    kind, spacing, provenance = "envelope", (1.0, 1.0), {}
    sidecar = _sidecar(path)
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise RasterFormatError(f"{path}: unreadable sidecar: {exc}") from exc
        if not isinstance(meta, dict):
            raise RasterFormatError(f"{path}: sidecar is not an object")
        kind = meta.get("kind", kind)
        if kind not in KINDS:
            raise RasterFormatError(f"{path}: sidecar kind {kind!r} unknown")
        sp = meta.get("spacing", list(spacing))
        spacing = (float(sp[0]), float(sp[1]))
        provenance = meta.get("provenance", {})
    return Raster(data=data, kind=kind, spacing=spacing, provenance=provenance)


def write_raster(path, data, kind="envelope", spacing=(1.0, 1.0),
                 provenance=None) -> Path:
    path = Path(path)
    arr = np.asarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise RasterFormatError(f"raster data must be 2-D, got ndim {arr.ndim}")
    if kind not in KINDS:
        raise RasterFormatError(f"unknown raster kind {kind!r}")
    rows, cols = arr.shape
    path.write_bytes(HEADER.pack(MAGIC, VERSION, DTYPE_F32, rows, cols)
                     + arr.tobytes(order="C"))
    meta = {
        "kind": kind,
        "spacing": [float(spacing[0]), float(spacing[1])],
        "provenance": provenance or {},
    }
    _sidecar(path).write_text(
        json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    return path
