"""Reader for the MNIST IDX file format."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    pass


def _read(path, magic: int, n_dims: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    header = 4 + 4 * n_dims
    if len(raw) >= 4:
        found = struct.unpack_from(">I", raw, 0)[0]
        if found != magic:
            raise IdxFormatError(f"{path}: bad magic at byte offset 0: expected 0x{magic:08x}, got 0x{found:08x}")
    if len(raw) < header:
        raise IdxFormatError(f"{path}: truncated header: expected {header} bytes, got {len(raw)}")
    dims = struct.unpack_from(f">{n_dims}I", raw, 4)
    expected = header + int(np.prod(dims))
    if len(raw) != expected:
        raise IdxFormatError(
            f"{path}: payload length mismatch at byte offset {header}: expected {expected} bytes in total, got {len(raw)}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def ingest_mnist_idx(images_path, labels_path, canvas: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Load digits padded to ``canvas`` x ``canvas`` and their labels.

    Returns ``(masks, labels)`` where ``masks`` is boolean foreground
    (intensity > 0.5 after scaling to [0, 1]).
    """
    images = _read(images_path, IMAGES_MAGIC, 3)
    labels = _read(labels_path, LABELS_MAGIC, 1)
    if len(images) != len(labels):
        raise IdxFormatError(f"image count {len(images)} != label count {len(labels)}")
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"{labels_path}: labels must be digits 0-9, found {labels.max()}")
    n, h, w = images.shape
    if h > canvas or w > canvas:
        raise IdxFormatError(f"images of {h}x{w} do not fit a {canvas}x{canvas} canvas")
    top, left = (canvas - h) // 2, (canvas - w) // 2
    masks = np.zeros((n, canvas, canvas), dtype=bool)
    masks[:, top:top + h, left:left + w] = images.astype(np.float32) / 255.0 > 0.5
    return masks, labels.astype(np.int32)


def write_idx(path, array: np.ndarray) -> None:
    """Write a uint8 array as IDX (used for fixtures and round-trip tests)."""
    array = np.asarray(array, dtype=np.uint8)
    magic = IMAGES_MAGIC if array.ndim == 3 else LABELS_MAGIC
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())
