"""Binary dataset container and its metadata sidecar.

Layout (all little-endian)::

    b"SCBD"                       magic
    uint32 version                currently 1
    uint32 n                      number of examples
    uint32 ndim, uint32[ndim]     per-example feature shape
    uint32 n_cols                 number of integer label columns
    n_cols x 8-byte ASCII names   NUL padded ("y", "e", "gene", ...)
    float32[n * prod(shape)]      features, row-major
    int32[n] per label column     in header order

The sidecar ``<file>.meta.txt`` holds ``key = value`` lines.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SCBD"
VERSION = 1


class ContainerError(ValueError):
    pass


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    e: np.ndarray
    extra: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float32)
        self.y = np.asarray(self.y, dtype=np.int32).reshape(-1)
        self.e = np.asarray(self.e, dtype=np.int32).reshape(-1)
        self.extra = {k: np.asarray(v, dtype=np.int32).reshape(-1) for k, v in self.extra.items()}
        n = len(self.x)
        for name, col in self.columns().items():
            if len(col) != n:
                raise ContainerError(f"column {name!r} has {len(col)} entries, expected {n}")

    def __len__(self) -> int:
        return len(self.x)

    def columns(self) -> dict[str, np.ndarray]:
        return {"y": self.y, "e": self.e, **self.extra}

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.x[idx], self.y[idx], self.e[idx],
                       {k: v[idx] for k, v in self.extra.items()}, dict(self.meta))


def atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_dataset(ds: Dataset) -> bytes:
    cols = ds.columns()
    shape = ds.x.shape[1:]
    parts = [MAGIC, struct.pack("<III", VERSION, len(ds), len(shape)), struct.pack(f"<{len(shape)}I", *shape),
             struct.pack("<I", len(cols))]
    for name in cols:
        raw = name.encode("ascii")
        if len(raw) > 8:
            raise ContainerError(f"column name {name!r} longer than 8 bytes")
        parts.append(raw.ljust(8, b"\0"))
    parts.append(ds.x.astype("<f4").tobytes())
    for col in cols.values():
        parts.append(col.astype("<i4").tobytes())
    return b"".join(parts)


def decode_dataset(raw: bytes, source: str = "<bytes>") -> Dataset:
    if raw[:4] != MAGIC:
        raise ContainerError(f"{source}: bad magic: expected {MAGIC!r}, got {raw[:4]!r}")
    if len(raw) < 16:
        raise ContainerError(f"{source}: truncated header")
    version, n, ndim = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise ContainerError(f"{source}: unsupported container version {version} (expected {VERSION})")
    off = 16
    shape = struct.unpack_from(f"<{ndim}I", raw, off)
    off += 4 * ndim
    (n_cols,) = struct.unpack_from("<I", raw, off)
    off += 4
    names = [raw[off + 8 * i:off + 8 * (i + 1)].rstrip(b"\0").decode("ascii") for i in range(n_cols)]
    off += 8 * n_cols
    n_feat = n * int(np.prod(shape))
    expected = off + 4 * n_feat + 4 * n * n_cols
    if len(raw) != expected:
        raise ContainerError(f"{source}: truncated or oversized payload: expected {expected} bytes, got {len(raw)}")
    x = np.frombuffer(raw, dtype="<f4", count=n_feat, offset=off).reshape((n,) + tuple(shape))
    off += 4 * n_feat
    cols = {}
    for name in names:
        cols[name] = np.frombuffer(raw, dtype="<i4", count=n, offset=off)
        off += 4 * n
    if "y" not in cols or "e" not in cols:
        raise ContainerError(f"{source}: container must carry 'y' and 'e' columns")
    y, e = cols.pop("y"), cols.pop("e")
    return Dataset(x.astype(np.float32), y, e, cols)


def save_dataset(path, ds: Dataset) -> None:
    atomic_write(path, encode_dataset(ds))
    if ds.meta:
        write_meta(str(path) + ".meta.txt", ds.meta)


def load_dataset(path) -> Dataset:
    path = Path(path)
    ds = decode_dataset(path.read_bytes(), str(path))
    meta_path = Path(str(path) + ".meta.txt")
    if meta_path.exists():
        ds.meta = read_meta(meta_path)
    return ds


def write_meta(path, meta: dict) -> None:
    lines = [f"{k} = {v}" for k, v in meta.items()]
    atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def read_meta(path) -> dict[str, str]:
    meta = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ContainerError(f"{path}: malformed metadata line {line!r}")
        meta[key.strip()] = value.strip()
    return meta
