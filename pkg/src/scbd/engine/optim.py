"""AdamW with decoupled weight decay."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class OptimState:
    lr: float = 1e-4
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    skipped: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimState) -> dict[str, np.ndarray]:
    """Return updated parameter arrays; ``state`` is advanced in place.

    If any gradient is non-finite the step is skipped, the parameters are
    returned unchanged and ``state.skipped`` is incremented.
    """
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ValueError(f"adamw_step: gradient for {name!r} has shape {g.shape}, parameter {params[name].shape}")
    if not all(np.isfinite(g).all() for g in grads.values()):
        state.skipped += 1
        log.warning("adamw_step: non-finite gradient, step skipped (%d so far)", state.skipped)
        return params
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    out = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            out[name] = p
            continue
        dtype = p.dtype
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = (b1 * m + (1 - b1) * g).astype(dtype)
        v = (b2 * v + (1 - b2) * g * g).astype(dtype)
        state.m[name], state.v[name] = m, v
        decayed = p - dtype.type(state.lr * state.weight_decay) * p
        update = (m / c1) / (np.sqrt(v / c2) + state.eps)
        out[name] = (decayed - state.lr * update).astype(dtype)
    return out
