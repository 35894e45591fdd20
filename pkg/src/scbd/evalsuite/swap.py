"""Counterfactual generation by exchanging z_c / z_s between examples."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import ndcore as nd
from ..datagen.container import atomic_write
from ..nets import ModelParams, decode, encode

FOREGROUND = 0.3  # channel-max threshold separating glyph from background


@dataclass
class SwapResult:
    pairs: np.ndarray  # (P, 2) indices (a, b)
    tiles: np.ndarray  # (P, 3, C, H, W): recon a, z_c of b with z_s of a, z_c of a with z_s of b
    hue_a: np.ndarray
    hue_b: np.ndarray
    hue_swap: np.ndarray
    digit_kept: Optional[np.ndarray] = None
    digit_kept_source: Optional[np.ndarray] = None

    @property
    def side_transfer(self) -> float:
        """Fraction of pairs whose z_s swap lands on the donor's side of R = G."""
        return float(np.mean(np.sign(self.hue_swap) == np.sign(self.hue_b)))

    @property
    def hue_transfer(self) -> float:
        """Fraction of pairs whose z_s swap is closer in hue to the donor than to the source."""
        return float(np.mean(np.abs(self.hue_swap - self.hue_b) < np.abs(self.hue_swap - self.hue_a)))

    @property
    def digit_retention(self) -> float:
        """Fraction of pairs where the z_s swap leaves the z_c probe's reading of the reconstruction unchanged."""
        return float("nan") if self.digit_kept is None else float(np.mean(self.digit_kept))

    @property
    def source_retention(self) -> float:
        """Same, but against the probe's reading of the original image."""
        return float("nan") if self.digit_kept_source is None else float(np.mean(self.digit_kept_source))


def foreground_hue(img: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """Mean ``R - G`` over foreground pixels: positive reads red, negative green."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if mask is None or not mask.any():
        mask = img.max(axis=0) > FOREGROUND
    if not mask.any():
        return 0.0
    return float(np.mean(img[0][mask] - img[1][mask]))


def cross_env_pairs(e: np.ndarray, n_pairs: int, seed: int = 0, envs=(0, 1)) -> np.ndarray:
    """Random (a, b) pairs with a and b in different environments, directions alternating."""
    rng = np.random.default_rng(seed)
    e = np.asarray(e)
    pool0, pool1 = np.flatnonzero(e == envs[0]), np.flatnonzero(e == envs[1])
    if not len(pool0) or not len(pool1):
        raise ValueError("cross_env_pairs: both environments must be present")
    a = rng.choice(pool0, n_pairs)
    b = rng.choice(pool1, n_pairs)
    flip = np.arange(n_pairs) % 2 == 1
    a[flip], b[flip] = b[flip].copy(), a[flip].copy()
    return np.stack([a, b], axis=1)


def counterfactual_swap(params: ModelParams, x: np.ndarray, pairs, probe=None) -> SwapResult:
    """Decode original and swapped embedding combinations for each pair.

    With a fitted ``probe`` on z_c, the z_s-swapped image is re-encoded and
    its digit prediction compared with that of the re-encoded plain
    reconstruction (``digit_kept``) and of the source image
    (``digit_kept_source``). The first holds decoder fidelity fixed, so it
    isolates what the swap itself changes.
    """
    spec = params.spec
    if not spec.decoder:
        raise ValueError("counterfactual_swap: checkpoint has no trained decoder")
    if spec.single_block:
        raise ValueError("counterfactual_swap: needs a two-block model")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    fp = ModelParams(spec, {k: nd.stop_gradient(v) for k, v in params.arrays.items()})
    a, b = pairs[:, 0], pairs[:, 1]
    ea, eb = encode(fp, x[a]), encode(fp, x[b])
    recon = decode(fp, ea.z_c, ea.z_s).data
    c_swap = decode(fp, eb.z_c, ea.z_s).data
    s_swap = decode(fp, ea.z_c, eb.z_s).data
    tiles = np.stack([recon, c_swap, s_swap], axis=1)
    hue_a = np.array([foreground_hue(x[i]) for i in a])
    hue_b = np.array([foreground_hue(x[i]) for i in b])
    hue_swap = np.array([foreground_hue(img, x[i].max(axis=0) > 0.5) for img, i in zip(s_swap, a)])
    kept = kept_src = None
    if probe is not None:
        def read(img):
            return probe.predict(encode(fp, np.clip(img, 0.0, 1.0), with_s=False).z_c.data)

        after = read(s_swap)
        kept = read(recon) == after
        kept_src = probe.predict(ea.z_c.data) == after
    return SwapResult(pairs, tiles, hue_a, hue_b, hue_swap, kept, kept_src)


def tile_grid(tiles: np.ndarray) -> np.ndarray:
    """(rows, cols, C, H, W) -> (rows*H, cols*W, 3) in [0, 1]."""
    rows, cols, c, h, w = tiles.shape
    if c == 1:
        tiles = np.repeat(tiles, 3, axis=2)
    elif c != 3:
        raise ValueError(f"tile_grid: expected 1 or 3 channels, got {c}")
    grid = tiles.transpose(0, 3, 1, 4, 2).reshape(rows * h, cols * w, 3)
    return np.clip(grid, 0.0, 1.0)


def encode_ppm(img: np.ndarray) -> bytes:
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    h, w, _ = img.shape
    pixels = np.round(img * 255).astype(np.uint8)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def decode_ppm(raw: bytes) -> np.ndarray:
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError("decode_ppm: not a binary P6 image")
    w, h, maxval = (int(g) for g in m.groups())
    data = np.frombuffer(raw, dtype=np.uint8, offset=m.end())
    if data.size != w * h * 3:
        raise ValueError(f"decode_ppm: expected {w * h * 3} pixel bytes, got {data.size}")
    return data.reshape(h, w, 3).astype(np.float64) / maxval


def write_ppm(path, img: np.ndarray) -> None:
    atomic_write(path, encode_ppm(img))
