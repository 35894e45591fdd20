"""Naive O(N^2) loop evaluations of the contrastive losses.

These follow the per-anchor formulas term by term in float64 Python and share
no code with :mod:`scbd.contrastive.losses`; tests compare the two.
"""

import math

import numpy as np


def _row_log_probs(z, i, tau, diag_mode):
    n = len(z)
    logits = [float(np.dot(z[i], z[j])) / tau for j in range(n)]
    norm_set = [j for j in range(n) if j != i] if diag_mode == "mask_diagonal" else list(range(n))
    top = max(logits[j] for j in norm_set)
    lse = top + math.log(sum(math.exp(logits[j] - top) for j in norm_set))
    return [logits[j] - lse for j in range(n)]


def log_probs_loop(z, tau=0.1, diag_mode="mask_diagonal"):
    z = np.asarray(z, dtype=np.float64)
    return [_row_log_probs(z, i, tau, diag_mode) for i in range(len(z))]


def supcon_loop(z, labels, tau=0.1, diag_mode="mask_diagonal"):
    z = np.asarray(z, dtype=np.float64)
    labels = list(np.asarray(labels).reshape(-1))
    n = len(z)
    total = 0.0
    for i in range(n):
        q = _row_log_probs(z, i, tau, diag_mode)
        positives = [p for p in range(n) if p != i and labels[p] == labels[i]]
        if positives:
            total += -sum(q[p] for p in positives) / len(positives)
    return total / n


def supcon_pair_loop(z, y, e, tau=0.1, diag_mode="mask_diagonal"):
    keys = [(int(a), int(b)) for a, b in zip(np.asarray(y).reshape(-1), np.asarray(e).reshape(-1))]
    z = np.asarray(z, dtype=np.float64)
    n = len(z)
    total = 0.0
    for i in range(n):
        q = _row_log_probs(z, i, tau, diag_mode)
        positives = [p for p in range(n) if p != i and keys[p] == keys[i]]
        if positives:
            total += -sum(q[p] for p in positives) / len(positives)
    return total / n


def invariance_loop(z, e, tau=0.1, diag_mode="mask_diagonal"):
    z = np.asarray(z, dtype=np.float64)
    e = list(np.asarray(e).reshape(-1))
    n = len(z)
    total = 0.0
    for i in range(n):
        q = _row_log_probs(z, i, tau, diag_mode)
        same = sum(q[p] for p in range(n) if p != i and e[p] == e[i])
        other = sum(q[m] for m in range(n) if e[m] != e[i])
        total += abs(same / n - other / n)
    return total / n
