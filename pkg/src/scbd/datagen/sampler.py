"""Minibatch sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LabeledBatch:
    x: np.ndarray
    y: np.ndarray
    e: np.ndarray
    index: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.y)


def balanced_indices(y: np.ndarray, k_classes: int, m_per_class: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``k_classes`` distinct labels (weighted by frequency), then ``m_per_class`` examples of each."""
    y = np.asarray(y)
    labels, counts = np.unique(y, return_counts=True)
    eligible = counts >= m_per_class
    if eligible.sum() < k_classes:
        raise ValueError(
            f"balanced_minibatch: need {k_classes} labels with >= {m_per_class} examples, "
            f"only {int(eligible.sum())} qualify"
        )
    labels, counts = labels[eligible], counts[eligible]
    chosen = rng.choice(labels, size=k_classes, replace=False, p=counts / counts.sum())
    picks = [rng.choice(np.flatnonzero(y == label), size=m_per_class, replace=False) for label in chosen]
    idx = np.concatenate(picks)
    return idx[rng.permutation(len(idx))]


def balanced_minibatch(dataset, k_classes: int, m_per_class: int, seed_or_rng=0) -> LabeledBatch:
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else np.random.default_rng(seed_or_rng)
    idx = balanced_indices(dataset.y, k_classes, m_per_class, rng)
    return LabeledBatch(dataset.x[idx], dataset.y[idx], dataset.e[idx], idx)


def balance_labels(y, e) -> np.ndarray:
    """One integer per distinct (y, e) pair."""
    pairs = np.stack([np.asarray(y), np.asarray(e)], axis=1)
    return np.unique(pairs, axis=0, return_inverse=True)[1].reshape(-1)


class BatchStream:
    """Endless minibatches: class-balanced, or epoch-wise shuffled when ``k_classes`` is 0.

    ``balance_on`` picks the label that balancing uses: ``"y"`` or the
    ``(y, e)`` pair ``"ye"``.
    """

    def __init__(self, dataset, batch_size: int, rng: np.random.Generator, k_classes: int = 0, m_per_class: int = 0,
                 balance_on: str = "y"):
        if balance_on not in ("y", "ye"):
            raise ValueError(f"balance_on must be 'y' or 'ye', got {balance_on!r}")
        self.dataset = dataset
        self.labels = dataset.y if balance_on == "y" else balance_labels(dataset.y, dataset.e)
        self.batch_size = batch_size
        self.rng = rng
        self.k_classes = k_classes
        self.m_per_class = m_per_class
        self._order = np.empty(0, dtype=np.int64)
        self._pos = 0
        self.epoch = 0

    def _next_indices(self) -> np.ndarray:
        if self.k_classes:
            return balanced_indices(self.labels, self.k_classes, self.m_per_class, self.rng)
        n = len(self.dataset)
        if self._pos + self.batch_size > len(self._order):
            self._order = self.rng.permutation(n)
            self._pos = 0
            self.epoch += 1
        idx = self._order[self._pos:self._pos + self.batch_size]
        self._pos += self.batch_size
        return idx

    def next(self) -> LabeledBatch:
        idx = self._next_indices()
        return LabeledBatch(self.dataset.x[idx], self.dataset.y[idx], self.dataset.e[idx], idx)
