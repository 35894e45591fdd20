"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .array import Array, backward


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-4
    passed: bool = True

    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, eps: float = 1e-6, atol: float = 0.0) -> np.ndarray:
    """Elementwise relative error; differences within ``atol`` count as exact agreement."""
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), eps)
    return np.where(diff <= atol, 0.0, diff / scale)


def grad_check(
    f: Callable[[dict[str, Array]], Array],
    params: Mapping[str, np.ndarray | Array],
    h: float = 1e-5,
    max_coords: int = 256,
    tol: float = 1e-4,
    seed: int = 0,
    atol: float = 1e-8,
) -> GradCheckReport:
    """Compare reverse-mode gradients of ``f`` with central differences.

    ``f`` receives a dict of float64 parameter Arrays and returns a scalar.
    At most ``max_coords`` randomly chosen coordinates per parameter are
    perturbed by ``±h``. Evaluation runs in float64 so the comparison measures
    the backward rules rather than float32 rounding. Coordinates whose
    analytic and numeric values differ by at most ``atol`` pass regardless of
    scale; otherwise an exactly-zero gradient (an input no output depends on)
    fails on finite-difference round-off alone.
    """
    rng = np.random.default_rng(seed)
    base = {k: np.array(v.data if isinstance(v, Array) else v, dtype=np.float64) for k, v in params.items()}
    live = {k: Array(v, requires_grad=True, dtype=np.float64) for k, v in base.items()}
    loss = f(live)
    names = list(live)
    grads = dict(zip(names, backward(loss, [live[k] for k in names])))

    def evaluate(name: str, flat_index: int, delta: float) -> float:
        probe = {k: Array(v, dtype=np.float64) for k, v in base.items()}
        bumped = base[name].copy()
        bumped.reshape(-1)[flat_index] += delta
        probe[name] = Array(bumped, dtype=np.float64)
        return float(f(probe).data)

    report = GradCheckReport(tol=tol)
    for name in names:
        size = base[name].size
        idx = np.arange(size) if size <= max_coords else rng.choice(size, max_coords, replace=False)
        analytic = grads[name].reshape(-1)[idx]
        numeric = np.array([(evaluate(name, i, h) - evaluate(name, i, -h)) / (2 * h) for i in idx])
        err = float(relative_error(analytic, numeric, atol=atol).max()) if len(idx) else 0.0
        report.max_rel_error[name] = err
    report.passed = report.worst() <= tol
    return report
