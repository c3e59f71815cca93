"""Versioned binary checkpoints.

Layout: an 8-byte magic, a little-endian uint64 header length, a UTF-8 JSON
header (sorted keys: format version, metadata, and per-array name, shape and
byte offset), then the raw little-endian float64 buffers in header order.
Identical parameters and metadata always produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"RTOODCK\x00"
VERSION = 1


def dumps_checkpoint(params: Mapping[str, np.ndarray], meta: Mapping | None = None) -> bytes:
    entries = []
    offset = 0
    buffers = []
    for name in sorted(params):
        arr = np.asarray(params[name], dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        buffers.append(arr.tobytes(order="C"))
        offset += arr.nbytes
    header = json.dumps({"version": VERSION, "meta": dict(meta or {}), "arrays": entries},
                        sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + struct.pack("<Q", len(header)) + header + b"".join(buffers)


def loads_checkpoint(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if data[:8] != MAGIC:
        raise ValueError("not a checkpoint file")
    (n,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16 : 16 + n].decode())
    if header.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    base = 16 + n
    params = {}
    for e in header["arrays"]:
        count = int(np.prod(e["shape"])) if e["shape"] else 1
        start = base + e["offset"]
        arr = np.frombuffer(data[start : start + 8 * count], dtype="<f8").astype(np.float64)
        params[e["name"]] = arr.reshape(e["shape"])
    return params, header["meta"]


def save_checkpoint(path: str | Path, params: Mapping[str, np.ndarray], meta: Mapping | None = None) -> None:
    Path(path).write_bytes(dumps_checkpoint(params, meta))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    return loads_checkpoint(Path(path).read_bytes())
