"""Self-describing binary container for parameter buffers.

Layout: ``b"NDIFF1\\n"`` magic, a little-endian u32 header length, a UTF-8
JSON header (layer specs, tensor names/shapes/offsets, free-form extras),
then every tensor as little-endian float64 in header order.
"""
from __future__ import annotations

import io
import json
import os
import struct
from typing import Mapping, Union

import numpy as np

from ..errors import DataError

MAGIC = b"NDIFF1\n"
_DTYPE = "<f8"


def dumps(tensors: Mapping[str, np.ndarray], header: dict | None = None) -> bytes:
    entries, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=_DTYPE)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset,
                        "nbytes": arr.nbytes})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    meta = dict(header or {})
    meta["dtype"] = _DTYPE
    meta["tensors"] = entries
    raw = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<I", len(raw)) + raw + b"".join(blobs)


def loads(buf: bytes):
    """Inverse of :func:`dumps`; returns ``(tensors, header)``."""
    if not buf.startswith(MAGIC):
        raise DataError("not an ndiff checkpoint (bad magic)")
    pos = len(MAGIC)
    (hlen,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    header = json.loads(buf[pos:pos + hlen].decode("utf-8"))
    pos += hlen
    if header.get("dtype") != _DTYPE:
        raise DataError(f"unsupported checkpoint dtype {header.get('dtype')!r}")
    tensors = {}
    for e in header.pop("tensors"):
        start = pos + e["offset"]
        chunk = buf[start:start + e["nbytes"]]
        if len(chunk) != e["nbytes"]:
            raise DataError(f"checkpoint truncated in tensor {e['name']!r}")
        tensors[e["name"]] = np.frombuffer(chunk, dtype=_DTYPE).reshape(e["shape"]).astype(np.float64)
    header.pop("dtype")
    return tensors, header


def save(path: Union[str, os.PathLike, io.BufferedIOBase], tensors, header=None) -> None:
    data = dumps(tensors, header)
    if hasattr(path, "write"):
        path.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def load(path):
    if hasattr(path, "read"):
        return loads(path.read())
    with open(path, "rb") as fh:
        return loads(fh.read())
