"""Gene-level aggregation, complex-recovery AUPRC and batch-label F1."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score
from sklearn.model_selection import train_test_split

log = logging.getLogger(__name__)

PERCENTILES = tuple(range(80, 101))


@dataclass
class GeneEmbeddingTable:
    genes: np.ndarray  # gene ids, ascending
    embeddings: np.ndarray  # (n_genes, D)
    zero_variance: np.ndarray  # per-dimension flag raised during standardization

    def __len__(self) -> int:
        return len(self.genes)


@dataclass
class PrCurve:
    thresholds: np.ndarray  # percentile index i
    precision: np.ndarray
    recall: np.ndarray
    area: float
    two_tailed: bool = True

    def rows(self) -> list[tuple[int, float, float]]:
        return [(int(i), float(p), float(r)) for i, p, r in zip(self.thresholds, self.precision, self.recall)]


def aggregate_gene_embeddings(z, guide, gene, control_gene: int = 0) -> GeneEmbeddingTable:
    """Mean per guide, mean of guide means per gene, minus the control, then standardized per dimension."""
    z = np.asarray(z, dtype=np.float64)
    guide = np.asarray(guide).reshape(-1)
    gene = np.asarray(gene).reshape(-1)
    if not (len(z) == len(guide) == len(gene)):
        raise ValueError("aggregate_gene_embeddings: z, guide and gene must have equal length")
    if not np.any(gene == control_gene):
        raise ValueError(f"aggregate_gene_embeddings: control gene {control_gene} not present")
    guides, g_inv = np.unique(guide, return_inverse=True)
    guide_mean = np.zeros((len(guides), z.shape[1]))
    np.add.at(guide_mean, g_inv, z)
    guide_mean /= np.bincount(g_inv)[:, None]
    guide_gene = np.zeros(len(guides), dtype=gene.dtype)
    guide_gene[g_inv] = gene
    genes, gene_inv = np.unique(guide_gene, return_inverse=True)
    emb = np.zeros((len(genes), z.shape[1]))
    np.add.at(emb, gene_inv, guide_mean)
    emb /= np.bincount(gene_inv)[:, None]
    emb = emb - emb[np.searchsorted(genes, control_gene)]
    mean = emb.mean(axis=0)
    sd = emb.std(axis=0)
    flat = sd <= 1e-12
    if flat.any():
        log.warning("aggregate_gene_embeddings: %d zero-variance dimension(s) set to 0", int(flat.sum()))
    emb = np.where(flat, 0.0, (emb - mean) / np.where(flat, 1.0, sd))
    return GeneEmbeddingTable(genes, emb, flat)


def cosine_matrix(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    unit = x / np.where(norms > 0, norms, 1.0)
    return unit @ unit.T


def trapezoid_area(recall: np.ndarray, precision: np.ndarray) -> float:
    """Trapezoid under precision vs recall after sorting by recall; the lowest-recall point is duplicated at recall 0."""
    order = np.lexsort((-precision, recall))
    r = np.concatenate([[0.0], recall[order]])
    p = np.concatenate([[precision[order][0]], precision[order]])
    return float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2))


def corum_style_auprc(table: GeneEmbeddingTable, graph, two_tailed: bool = True, exclude_control: bool = True,
                      control_gene: int = 0) -> PrCurve:
    """Precision and recall of "related" calls from percentile thresholds on pairwise cosine similarity.

    ``area`` is the trapezoid area divided by the largest recall reached, so
    random embeddings score near the positive-pair base rate and a perfect
    embedding scores 1.
    """
    keep = table.genes != control_gene if exclude_control else np.ones(len(table), bool)
    genes = table.genes[keep]
    if len(genes) < 2:
        raise ValueError("corum_style_auprc: need at least 2 genes")
    comps = graph.complex_of[genes]
    if len(np.unique(comps[comps >= 0])) < 2:
        raise ValueError("corum_style_auprc: need at least 2 complexes")
    sim = cosine_matrix(table.embeddings[keep])
    iu = np.triu_indices(len(genes), k=1)
    s = sim[iu]
    truth = graph.pair_matrix(genes)[iu]
    n_true = int(truth.sum())
    prec, rec = [], []
    for i in PERCENTILES:
        called = s >= np.percentile(s, i)
        if two_tailed:
            called |= s <= np.percentile(s, 100 - i)
        tp = int(np.sum(called & truth))
        n_called = int(called.sum())
        prec.append(tp / n_called if n_called else 0.0)
        rec.append(tp / n_true if n_true else 0.0)
    prec, rec = np.asarray(prec), np.asarray(rec)
    # percentile thresholds stop short of full recall; report the area per unit of covered recall
    span = rec.max()
    area = trapezoid_area(rec, prec) / span if span > 0 else 0.0
    return PrCurve(np.asarray(PERCENTILES), prec, rec, area, two_tailed)


def batch_f1(embeddings, e, seed: int = 0, max_iter: int = 1000) -> float:
    """Macro-F1 of a logistic-regression well predictor on a held-out 40%."""
    x = np.asarray(embeddings, dtype=np.float64)
    e = np.asarray(e).reshape(-1)
    wells = np.unique(e)
    if len(wells) < 2:
        raise ValueError("batch_f1: need at least 2 wells")
    x_tr, x_te, e_tr, e_te = train_test_split(x, e, train_size=0.6, random_state=seed)
    if len(np.unique(e_tr)) < len(wells):
        log.info("batch_f1: a well is missing from the training split, retrying stratified")
        try:
            x_tr, x_te, e_tr, e_te = train_test_split(x, e, train_size=0.6, random_state=seed, stratify=e)
        except ValueError as exc:
            raise ValueError(f"batch_f1: cannot place every well in the training split: {exc}") from exc
        if len(np.unique(e_tr)) < len(wells):
            raise ValueError("batch_f1: cannot place every well in the training split")
    mean, sd = x_tr.mean(axis=0), x_tr.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    clf = LogisticRegression(max_iter=max_iter, random_state=seed)
    clf.fit((x_tr - mean) / sd, e_tr)
    pred = clf.predict((x_te - mean) / sd)
    return float(f1_score(e_te, pred, labels=wells, average="macro", zero_division=0))
