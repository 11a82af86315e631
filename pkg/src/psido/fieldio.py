"""Field serialization.

Binary layout (little-endian)::

    offset  size  content
    0       8     magic b"PSIDOFLD"
    8       4     uint32 format version (1)
    12      4     uint32 dim n
    16      8     float64 half-width L
    24      4     uint32 points per axis N
    28      4     uint32 domain flag (0 = x, 1 = xi)
    32      16*N^n  payload: (re, im) float64 pairs in C order
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .quantize import Field, GridSpec

__all__ = ["MAGIC", "to_bytes", "from_bytes", "save_field", "load_field", "to_json", "from_json"]

MAGIC = b"PSIDOFLD"
VERSION = 1
_HEADER = struct.Struct("<8sIIdII")


def to_bytes(u: Field) -> bytes:
    g = u.grid
    head = _HEADER.pack(MAGIC, VERSION, g.dim, float(g.L), g.N, 0 if u.domain == "x" else 1)
    payload = np.ascontiguousarray(u.values, dtype="<c16").tobytes()
    return head + payload


def from_bytes(data: bytes) -> Field:
    if len(data) < _HEADER.size:
        raise ValueError("field data shorter than its header")
    magic, version, dim, L, N, flag = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("not a field file (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported field format version {version}")
    g = GridSpec(dim, L, N)
    expected = _HEADER.size + 16 * g.size
    if len(data) != expected:
        raise ValueError(f"field payload has {len(data)} bytes, expected {expected}")
    vals = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(g.shape)
    return Field(vals.astype(complex), g, "x" if flag == 0 else "xi")


def save_field(u: Field, path) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(u))
    return path


def load_field(path) -> Field:
    return from_bytes(Path(path).read_bytes())


def to_json(u: Field) -> str:
    flat = u.values.ravel()
    return json.dumps({
        "grid": u.grid.to_dict(),
        "domain": u.domain,
        "re": flat.real.tolist(),
        "im": flat.imag.tolist(),
    })


def from_json(text: str) -> Field:
    d = json.loads(text)
    g = GridSpec(**d["grid"])
    vals = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    return Field(vals.reshape(g.shape), g, d.get("domain", "x"))
