"""Evaluation: probes, batch-correction metrics, sweeps and counterfactual swaps."""

from .batchcorr import (
    PERCENTILES,
    GeneEmbeddingTable,
    PrCurve,
    aggregate_gene_embeddings,
    batch_f1,
    corum_style_auprc,
    cosine_matrix,
    trapezoid_area,
)
from .probe import LinearProbe, embed, probe_accuracy
from .swap import SwapResult, counterfactual_swap, cross_env_pairs, decode_ppm, encode_ppm, foreground_hue, tile_grid, write_ppm
from .sweeps import ERM_GRID, ScanResult, SweepTable, correlation, domain_accuracies, erm_scan, sweep_alpha

__all__ = [
    "PERCENTILES", "ERM_GRID", "GeneEmbeddingTable", "LinearProbe", "PrCurve", "ScanResult", "SwapResult",
    "SweepTable", "aggregate_gene_embeddings", "batch_f1", "correlation", "corum_style_auprc", "cosine_matrix",
    "counterfactual_swap", "cross_env_pairs", "decode_ppm", "domain_accuracies", "embed", "encode_ppm", "erm_scan",
    "foreground_hue", "probe_accuracy", "sweep_alpha", "tile_grid", "trapezoid_area", "write_ppm",
]
