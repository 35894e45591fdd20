"""Colored-digit domain-generalization data.

In training environment 0 the foreground is red with green/blue set to
``y / 10``; in environment 1 it is green with red/blue set to ``(9 - y) / 10``.
The test environment (marked ``e = 2``) draws every digit white. Background
pixels are 0 everywhere.
"""

from __future__ import annotations

import numpy as np

from .container import Dataset
from .font import render_digit
from .idx import ingest_mnist_idx

N_CLASSES = 10
TEST_ENV = 2
GLYPH_SOURCES = ("font", "mnist")


def foreground_color(y: int, e: int) -> tuple[float, float, float]:
    if e == 0:
        v = y / N_CLASSES
        return 1.0, v, v
    if e == 1:
        v = (N_CLASSES - 1 - y) / N_CLASSES
        return v, 1.0, v
    return 1.0, 1.0, 1.0


def colorize(mask: np.ndarray, y: int, e: int) -> np.ndarray:
    color = np.asarray(foreground_color(y, e), dtype=np.float32)
    return color[:, None, None] * mask[None, :, :].astype(np.float32)


def _example_rng(seed: int, env: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(env), int(index)])


def _make_env(n: int, env: int, seed: int, glyph_source: str, pool) -> Dataset:
    x = np.zeros((n, 3, 32, 32), dtype=np.float32)
    y = np.zeros(n, dtype=np.int32)
    for i in range(n):
        rng = _example_rng(seed, env, i)
        label = int(rng.integers(N_CLASSES))
        if glyph_source == "font":
            mask = render_digit(label, rng)
        else:
            masks, by_label = pool
            candidates = by_label[label]
            mask = masks[candidates[rng.integers(len(candidates))]]
        x[i] = colorize(mask, label, env)
        y[i] = label
    return Dataset(x, y, np.full(n, env, dtype=np.int32))


def _stratified_holdout(y: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    held = []
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        idx = idx[rng.permutation(len(idx))]
        held.extend(idx[: int(round(fraction * len(idx)))])
    return np.sort(np.asarray(held, dtype=np.int64))


def gen_cmnist(n_per_env: int, seed: int = 0, glyph_source: str = "font", mnist_paths=None,
               val_fraction: float = 0.1, n_test: int | None = None) -> dict[str, Dataset]:
    """Splits ``train_e0``, ``train_e1``, ``val`` (in-distribution) and ``test``.

    ``val`` holds out ``val_fraction`` of each training environment,
    stratified by digit. ``n_test`` defaults to ``n_per_env``.
    """
    if n_per_env < 10:
        raise ValueError(f"n_per_env must be >= 10, got {n_per_env}")
    if glyph_source not in GLYPH_SOURCES:
        raise ValueError(f"unknown glyph_source {glyph_source!r}; expected one of {GLYPH_SOURCES}")
    pool = None
    if glyph_source == "mnist":
        if mnist_paths is None:
            raise ValueError("glyph_source='mnist' needs mnist_paths=(images, labels)")
        masks, labels = ingest_mnist_idx(*mnist_paths)
        pool = (masks, {k: np.flatnonzero(labels == k) for k in range(N_CLASSES)})
    n_test = n_per_env if n_test is None else n_test

    splits: dict[str, Dataset] = {}
    val_parts = []
    split_rng = np.random.default_rng([int(seed), 99])
    for env in (0, 1):
        full = _make_env(n_per_env, env, seed, glyph_source, pool)
        held = _stratified_holdout(full.y, val_fraction, split_rng)
        keep = np.setdiff1d(np.arange(n_per_env), held)
        splits[f"train_e{env}"] = full.subset(keep)
        val_parts.append(full.subset(held))
    splits["val"] = Dataset(
        np.concatenate([p.x for p in val_parts]),
        np.concatenate([p.y for p in val_parts]),
        np.concatenate([p.e for p in val_parts]),
    )
    splits["test"] = _make_env(n_test, TEST_ENV, seed, glyph_source, pool)
    meta = {"generator": "cmnist", "n_per_env": n_per_env, "seed": seed, "glyph_source": glyph_source,
            "val_fraction": val_fraction, "n_test": n_test}
    for name, ds in splits.items():
        ds.meta = {**{k: str(v) for k, v in meta.items()}, "split": name}
    return splits


def pooled_train(splits: dict[str, Dataset]) -> Dataset:
    parts = [splits["train_e0"], splits["train_e1"]]
    return Dataset(np.concatenate([p.x for p in parts]), np.concatenate([p.y for p in parts]),
                   np.concatenate([p.e for p in parts]))
