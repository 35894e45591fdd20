"""Synthetic datasets, the binary dataset container and minibatch samplers."""

from .cmnist import N_CLASSES, TEST_ENV, colorize, foreground_color, gen_cmnist, pooled_train
from .container import ContainerError, Dataset, decode_dataset, encode_dataset, load_dataset, read_meta, save_dataset, write_meta
from .font import render_digit
from .idx import IdxFormatError, ingest_mnist_idx, write_idx
from .opssim import ComplexGraph, gen_ops_sim, gene_effects, save_graph
from .sampler import BatchStream, LabeledBatch, balance_labels, balanced_indices, balanced_minibatch

__all__ = [
    "N_CLASSES", "TEST_ENV", "BatchStream", "ComplexGraph", "ContainerError", "Dataset", "IdxFormatError",
    "LabeledBatch", "balance_labels", "balanced_indices", "balanced_minibatch", "colorize", "decode_dataset",
    "encode_dataset", "foreground_color", "gen_cmnist", "gen_ops_sim", "gene_effects", "ingest_mnist_idx",
    "load_dataset", "pooled_train", "read_meta", "render_digit", "save_dataset", "save_graph", "write_idx",
    "write_meta",
]
