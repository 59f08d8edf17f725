"""Binary checkpoint container.

Layout (all integers little-endian)::

    8 bytes   magic  b"TDRSTCK\\0"
    4 bytes   uint32 format version (currently 1)
    8 bytes   uint64 header length N
    N bytes   UTF-8 JSON header
    ...       tensor payloads, float64 little-endian, C order, concatenated

The header carries arbitrary metadata under ``"meta"`` and a ``"tensors"``
list of ``{"name", "shape", "offset", "nbytes"}`` entries, offsets counted
from the first payload byte.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"TDRSTCK\x00"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, tensors: dict, meta: dict) -> None:
    entries = []
    payloads = []
    offset = 0
    for name, value in tensors.items():
        arr = np.ascontiguousarray(getattr(value, "data", value), dtype="<f8")
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        payloads.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "tensors": entries}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in payloads:
            fh.write(raw)


def load_checkpoint(path):
    """Return ``(tensors, meta)`` where ``tensors`` maps name to ndarray."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    (version,) = struct.unpack("<I", blob[8:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (hlen,) = struct.unpack("<Q", blob[12:20])
    header = json.loads(blob[20 : 20 + hlen].decode("utf-8"))
    base = 20 + hlen
    tensors = {}
    for e in header["tensors"]:
        start = base + e["offset"]
        raw = blob[start : start + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise CheckpointError(f"{path}: truncated tensor {e['name']}")
        tensors[e["name"]] = np.frombuffer(raw, dtype="<f8").reshape(e["shape"]).astype(np.float64)
    return tensors, header["meta"]
