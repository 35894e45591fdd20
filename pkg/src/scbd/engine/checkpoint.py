"""Checkpoint container.

Layout (little-endian)::

    b"SCBK"  uint32 version  uint32 header_length
    header   UTF-8 JSON (sorted keys): step, config, spec, rng, optimizer
             scalars, and a table of arrays [name, dtype, shape, offset]
    payload  raw array bytes in table order
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..datagen.container import atomic_write

MAGIC = b"SCBK"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    step: int = 0
    spec: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    optim: dict = field(default_factory=dict)  # scalars of OptimState
    moments: dict[str, np.ndarray] = field(default_factory=dict)  # "m/<name>", "v/<name>"
    rng: dict = field(default_factory=dict)
    extra: dict[str, np.ndarray] = field(default_factory=dict)  # e.g. batch-stream order
    info: dict[str, Any] = field(default_factory=dict)


def _groups(ck: Checkpoint):
    return (("param", ck.params), ("moment", ck.moments), ("extra", ck.extra))


def encode_checkpoint(ck: Checkpoint) -> bytes:
    table, blobs, offset = [], [], 0
    for group, arrays in _groups(ck):
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr)
            le = arr.astype(arr.dtype.newbyteorder("<"))
            raw = le.tobytes()
            table.append([group, name, le.dtype.str, list(arr.shape), offset, len(raw)])
            blobs.append(raw)
            offset += len(raw)
    header = {
        "step": int(ck.step), "spec": ck.spec, "config": ck.config, "optim": ck.optim,
        "rng": ck.rng, "info": ck.info, "arrays": table,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<II", VERSION, len(head)) + head + b"".join(blobs)


def decode_checkpoint(raw: bytes, source: str = "<bytes>") -> Checkpoint:
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{source}: bad magic: expected {MAGIC!r}, got {raw[:4]!r}")
    if len(raw) < 12:
        raise CheckpointError(f"{source}: truncated header")
    version, head_len = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise CheckpointError(f"{source}: checkpoint version {version} does not match supported version {VERSION}")
    if len(raw) < 12 + head_len:
        raise CheckpointError(f"{source}: truncated header: expected {head_len} bytes of JSON")
    header = json.loads(raw[12:12 + head_len].decode("utf-8"))
    base = 12 + head_len
    total = sum(entry[5] for entry in header["arrays"])
    if len(raw) != base + total:
        raise CheckpointError(f"{source}: truncated payload: expected {base + total} bytes, got {len(raw)}")
    groups: dict[str, dict] = {"param": {}, "moment": {}, "extra": {}}
    for group, name, dtype, shape, off, nbytes in header["arrays"]:
        arr = np.frombuffer(raw, dtype=np.dtype(dtype), count=nbytes // np.dtype(dtype).itemsize, offset=base + off)
        groups[group][name] = arr.reshape(shape).astype(np.dtype(dtype).newbyteorder("="))
    return Checkpoint(
        params=groups["param"], step=header["step"], spec=header["spec"], config=header["config"],
        optim=header["optim"], moments=groups["moment"], rng=header["rng"], extra=groups["extra"],
        info=header["info"],
    )


def save_checkpoint(path, ck: Checkpoint) -> None:
    atomic_write(path, encode_checkpoint(ck))


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    return decode_checkpoint(path.read_bytes(), str(path))
