"""Supervised contrastive and invariance losses, and their four-term sum."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import ndcore as nd
from ..ndcore import Array

MASK_DIAGONAL = "mask_diagonal"
APPENDIX_VERBATIM = "appendix_verbatim"
DIAG_MODES = (MASK_DIAGONAL, APPENDIX_VERBATIM)

ZS_KEYS = ("e", "ye")

# Logit added to i == j in mask_diagonal mode; exp underflows to exactly 0.
DIAGONAL_LOGIT = -1e9


@dataclass(frozen=True)
class ObjectiveConfig:
    tau: float = 0.1
    alpha: float = 0.0
    zs_key: str = "e"
    recon_enabled: bool = True
    diag_mode: str = MASK_DIAGONAL

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.zs_key not in ZS_KEYS:
            raise ValueError(f"zs_key must be one of {ZS_KEYS}, got {self.zs_key!r}")
        if self.diag_mode not in DIAG_MODES:
            raise ValueError(f"diag_mode must be one of {DIAG_MODES}, got {self.diag_mode!r}")


@dataclass
class PairMasks:
    """``pos[i, j]``: same key and ``i != j``. ``neg[i, j]``: different key."""

    pos: np.ndarray
    neg: np.ndarray

    @property
    def n(self) -> int:
        return self.pos.shape[0]


def build_masks(labels, n: Optional[int] = None) -> PairMasks:
    labels = np.asarray(labels).reshape(-1)
    n = len(labels) if n is None else n
    if n != len(labels):
        raise ValueError(f"build_masks: expected {n} labels, got {len(labels)}")
    if n < 2:
        raise ValueError("build_masks: need at least 2 examples to form pairs")
    same = labels[:, None] == labels[None, :]
    off_diag = ~np.eye(n, dtype=bool)
    return PairMasks(pos=same & off_diag, neg=~same)


def pair_key(y, e) -> np.ndarray:
    """Encode each (y, e) pair injectively as one integer."""
    pairs = np.stack([np.asarray(y).reshape(-1), np.asarray(e).reshape(-1)], axis=1)
    _, key = np.unique(pairs, axis=0, return_inverse=True)
    return key.reshape(-1)


def _check_unit_rows(z: Array, op: str) -> None:
    if z.ndim != 2:
        raise nd.ShapeError(f"{op}: expected an N x D embedding matrix, got shape {z.shape}")
    if z.shape[0] < 2:
        raise ValueError(f"{op}: need at least 2 examples, got {z.shape[0]}")
    norms = np.sqrt((z.data.astype(np.float64) ** 2).sum(axis=1))
    worst = np.abs(norms - 1.0).max()
    if worst > 1e-3:
        raise ValueError(f"{op}: embedding rows must be unit norm (max deviation {worst:.3g})")


def match_log_probs(z: Array, tau: float = 0.1, diag_mode: str = MASK_DIAGONAL) -> Array:
    """Row-wise log matching probabilities ``log_softmax(z z^T / tau)``.

    With ``mask_diagonal`` each row is normalized over the other examples
    only; ``appendix_verbatim`` keeps the self-similarity in the denominator.
    The N x N block is evaluated in float64 whatever the dtype of ``z``.
    """
    _check_unit_rows(z, "match_log_probs")
    if diag_mode not in DIAG_MODES:
        raise ValueError(f"unknown diag_mode {diag_mode!r}")
    z64 = nd.astype(z, np.float64)
    logits = nd.matmul(z64, nd.transpose(z64)) * (1.0 / tau)
    if diag_mode == MASK_DIAGONAL:
        logits = logits + Array(np.eye(z.shape[0]) * DIAGONAL_LOGIT, dtype=np.float64)
    return nd.log_softmax(logits)


def _supcon_from_logprobs(q: Array, masks: PairMasks) -> Array:
    counts = np.maximum(masks.pos.sum(axis=1, keepdims=True), 1)
    target = Array(masks.pos / counts, dtype=q.dtype)
    return -nd.mean(nd.sum(q * target, axis=1))


def supcon_loss(z: Array, labels, tau: float = 0.1, diag_mode: str = MASK_DIAGONAL) -> Array:
    """Mean over anchors of the negative average log matching probability of positives.

    Anchors without positives contribute 0 but still count in the mean.
    """
    q = match_log_probs(z, tau, diag_mode)
    return nd.astype(_supcon_from_logprobs(q, build_masks(labels, z.shape[0])), z.dtype)


def supcon_loss_pair_key(z: Array, y, e, tau: float = 0.1, diag_mode: str = MASK_DIAGONAL) -> Array:
    return supcon_loss(z, pair_key(y, e), tau, diag_mode)


def invariance_loss(z_c: Array, e, tau: float = 0.1, diag_mode: str = MASK_DIAGONAL) -> Array:
    """Mean over anchors of ``|lp_i - ln_i|``.

    ``lp_i`` and ``ln_i`` sum the anchor's log matching probabilities over
    same-environment and other-environment examples, each scaled by 1/N.
    """
    e = np.asarray(e).reshape(-1)
    if len(np.unique(e)) < 2:
        raise ValueError("invariance_loss: batch holds a single environment; invariance is undefined")
    q = match_log_probs(z_c, tau, diag_mode)
    masks = build_masks(e, z_c.shape[0])
    n = z_c.shape[0]
    signed = Array((masks.pos.astype(np.float64) - masks.neg) / n, dtype=q.dtype)
    return nd.astype(nd.mean(nd.abs(nd.sum(q * signed, axis=1))), z_c.dtype)


def recon_loss(x: Array, x_hat: Array) -> Array:
    """Mean squared error; unit-variance Gaussian NLL up to a constant."""
    if x.shape != x_hat.shape:
        raise nd.ShapeError(f"recon_loss: target shape {x.shape} != reconstruction shape {x_hat.shape}")
    diff = x_hat - x
    return nd.mean(diff * diff)


def scbd_objective(
    batch,
    embeddings,
    decode_fn: Optional[Callable[[Array, Optional[Array]], Array]],
    cfg: ObjectiveConfig,
) -> tuple[Array, dict[str, Array]]:
    """Total loss and its per-term breakdown.

    ``embeddings.z_s`` may be ``None`` (single-block model), in which case the
    z_s term is dropped. The decoder sees the embeddings through a
    stop-gradient, so the reconstruction term only trains the decoder.
    """
    y = np.asarray(batch.y)
    e = np.asarray(batch.e)
    terms: dict[str, Array] = {}
    terms["sup_c"] = supcon_loss(embeddings.z_c, y, cfg.tau, cfg.diag_mode)
    total = terms["sup_c"]
    if embeddings.z_s is not None:
        key = e if cfg.zs_key == "e" else pair_key(y, e)
        terms["sup_s"] = supcon_loss(embeddings.z_s, key, cfg.tau, cfg.diag_mode)
        total = total + terms["sup_s"]
    if cfg.alpha > 0 or len(np.unique(e)) > 1:
        terms["inv"] = invariance_loss(embeddings.z_c, e, cfg.tau, cfg.diag_mode)
        if cfg.alpha > 0:
            total = total + terms["inv"] * cfg.alpha
    if cfg.recon_enabled and decode_fn is not None:
        z_s = nd.stop_gradient(embeddings.z_s) if embeddings.z_s is not None else None
        x_hat = decode_fn(nd.stop_gradient(embeddings.z_c), z_s)
        x = batch.x if isinstance(batch.x, Array) else Array(batch.x, dtype=x_hat.dtype)
        terms["recon"] = recon_loss(x, x_hat)
        total = total + terms["recon"]
    return total, terms
