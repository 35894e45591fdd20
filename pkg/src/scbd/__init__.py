"""Supervised Contrastive Block Disentanglement."""

__version__ = "0.1.0"
