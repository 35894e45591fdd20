"""Pair masks, matching probabilities, and the SCBD loss terms."""

from .losses import (
    APPENDIX_VERBATIM,
    DIAG_MODES,
    MASK_DIAGONAL,
    ObjectiveConfig,
    PairMasks,
    build_masks,
    invariance_loss,
    match_log_probs,
    pair_key,
    recon_loss,
    scbd_objective,
    supcon_loss,
    supcon_loss_pair_key,
)

__all__ = [
    "APPENDIX_VERBATIM", "DIAG_MODES", "MASK_DIAGONAL", "ObjectiveConfig", "PairMasks",
    "build_masks", "invariance_loss", "match_log_probs", "pair_key", "recon_loss",
    "scbd_objective", "supcon_loss", "supcon_loss_pair_key",
]
