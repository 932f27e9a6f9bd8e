"""Minimal 2D raster container: 16-byte header + row-major float32 payload.

Header: magic ``QUSR``, u16 version, u16 dtype code (1 = float32),
u32 axial dim, u32 lateral dim, all little-endian. The payload is
axial-major (row index = axial sample). A JSON sidecar ``<file>.json``
carries spacing, kind, and provenance; it is written with sorted keys and
no timestamps so identical content yields identical bytes.

The deliberately tiny format keeps golden-file tests bit-exact and lets
other languages read frames with a few lines of code.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, RasterFormatError

MAGIC = b"QUSR"
VERSION = 1
DTYPE_F32 = 1

_HEADER = struct.Struct("<4sHHII")

KINDS = ("envelope", "rf", "density", "parametric", "uncertainty")


@dataclass(frozen=True)
class Raster:
    """In-memory view of a raster file: float32 data plus sidecar metadata."""

    data: np.ndarray
    kind: str = "envelope"
    spacing: tuple[float, float] = (1.0, 1.0)
    provenance: dict = field(default_factory=dict)


def write_raster(
    path,
    data,
    *,
    kind: str,
    spacing: tuple[float, float] = (1.0, 1.0),
    provenance: dict | None = None,
) -> Path:
    """Write ``data`` and its sidecar; returns the raster path.

    Data is converted to float32. Both files are written to a temporary
    name and renamed, so a crash never leaves a truncated raster behind.
    """
    path = Path(path)
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ParameterError(f"raster data must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"raster dims must be positive, got {arr.shape}")
    if kind not in KINDS:
        raise ParameterError(f"kind must be one of {KINDS}, got {kind!r}")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, arr.shape[0], arr.shape[1])
    payload = np.ascontiguousarray(arr).astype("<f4", copy=False).tobytes()
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)

    sidecar = {
        "kind": kind,
        "spacing": [float(spacing[0]), float(spacing[1])],
        "provenance": provenance if provenance is not None else {},
    }
    side_path = sidecar_path(path)
    side_tmp = side_path.with_name(side_path.name + ".tmp")
    with open(side_tmp, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    os.replace(side_tmp, side_path)
    return path


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_raster(path) -> Raster:
    """Read a raster and its sidecar (sidecar optional, defaults apply)."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise
    if len(blob) < _HEADER.size:
        raise RasterFormatError(f"{path}: too short for a raster header")
    magic, version, dtype_code, n_a, n_l = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise RasterFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise RasterFormatError(f"{path}: unsupported version {version}")
    if dtype_code != DTYPE_F32:
        raise RasterFormatError(f"{path}: unsupported dtype code {dtype_code}")
    if n_a < 1 or n_l < 1:
        raise RasterFormatError(f"{path}: non-positive dims {(n_a, n_l)}")
    expected = _HEADER.size + 4 * n_a * n_l
    if len(blob) != expected:
        raise RasterFormatError(
            f"{path}: payload length {len(blob)} != expected {expected} "
            f"for dims {(n_a, n_l)}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n_a, n_l)
    data = data.copy()  # decouple from the read buffer
    data.flags.writeable = False

    kind = "envelope"
    spacing = (1.0, 1.0)
    provenance: dict = {}
    side = sidecar_path(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise RasterFormatError(f"{side}: invalid sidecar JSON: {exc}") from exc
        kind = meta.get("kind", kind)
        sp = meta.get("spacing", list(spacing))
        spacing = (float(sp[0]), float(sp[1]))
        provenance = meta.get("provenance", {})
    return Raster(data=data, kind=kind, spacing=spacing, provenance=provenance)
