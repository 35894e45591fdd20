"""Linear probes on frozen features."""

from __future__ import annotations

import numpy as np
from sklearn.linear_model import LogisticRegression

from .. import ndcore as nd
from ..nets import ModelParams, encode


def embed(params: ModelParams, x: np.ndarray, which: str = "r_c", batch: int = 512) -> np.ndarray:
    """Stack one field of :class:`EmbeddingSet` over ``x`` in batches."""
    frozen = ModelParams(params.spec, {k: nd.stop_gradient(v) for k, v in params.arrays.items()})
    with_s = which in ("r_s", "z_s")
    out = []
    for i in range(0, len(x), batch):
        emb = encode(frozen, x[i:i + batch], with_s=with_s)
        field = getattr(emb, which)
        if field is None:
            raise ValueError(f"embed: model does not produce {which}")
        out.append(field.data)
    return np.concatenate(out)


class LinearProbe:
    """Multinomial logistic regression on standardized features."""

    def __init__(self, seed: int = 0, max_iter: int = 2000, C: float = 1.0):
        self.seed, self.max_iter, self.C = seed, max_iter, C
        self._clf = None

    def fit(self, features, labels) -> "LinearProbe":
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels).reshape(-1)
        if len(np.unique(labels)) < 2:
            raise ValueError("probe: training labels hold a single class")
        self._mean = features.mean(axis=0)
        sd = features.std(axis=0)
        self._sd = np.where(sd > 0, sd, 1.0)
        self._clf = LogisticRegression(max_iter=self.max_iter, C=self.C, random_state=self.seed)
        self._clf.fit((features - self._mean) / self._sd, labels)
        return self

    def predict(self, features) -> np.ndarray:
        if self._clf is None:
            raise RuntimeError("probe: call fit first")
        return self._clf.predict((np.asarray(features, dtype=np.float64) - self._mean) / self._sd)

    def score(self, features, labels) -> float:
        return float(np.mean(self.predict(features) == np.asarray(labels).reshape(-1)))


def probe_accuracy(train_features, train_labels, eval_features, eval_labels, seed: int = 0) -> float:
    """Fit on one split, report accuracy on another."""
    if train_features is eval_features:
        raise ValueError("probe_accuracy: evaluation split must be disjoint from probe-training data")
    return LinearProbe(seed).fit(train_features, train_labels).score(eval_features, eval_labels)
