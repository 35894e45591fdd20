"""Simulated pooled perturbation screen with well-level batch effects.

Gene 0 is the non-targeting control. Perturbed genes ``1..G`` are grouped
into complexes of ``complex_size``; genes in complex ``k`` share a unit
direction ``u_k`` and get effect ``mu_g = u_k + 0.3 v_g``. Each perturbed
gene has four guides with a small per-guide jitter; the control has
``control_guides`` guides with zero effect. Every cell lands in a uniformly
drawn well ``w`` and is observed as::

    x = mu_guide * gain_w + shift_w + N(0, 0.5^2)

with ``|shift_w|`` and ``gain_w - 1`` scaling with ``batch_strength``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .container import Dataset, atomic_write

GUIDES_PER_GENE = 4
GENE_JITTER = 0.3
GUIDE_JITTER = 0.1
CELL_NOISE = 0.5
SHIFT_SCALE = 3.0  # per-feature sd of the well shift at batch_strength = 1
GAIN_SCALE = 0.2  # per-feature sd of the well gain at batch_strength = 1
IMAGE_SHAPE = (4, 16, 16)


@dataclass
class ComplexGraph:
    """``complex_of[g]`` for every gene; the control carries -1."""

    complex_of: np.ndarray

    @property
    def n_genes(self) -> int:
        return len(self.complex_of)

    def related(self, g: int, h: int) -> bool:
        return g != h and self.complex_of[g] >= 0 and self.complex_of[g] == self.complex_of[h]

    def pairs(self) -> list[tuple[int, int]]:
        out = []
        for k in np.unique(self.complex_of[self.complex_of >= 0]):
            out.extend(combinations(np.flatnonzero(self.complex_of == k).tolist(), 2))
        return sorted(out)

    def pair_matrix(self, genes=None) -> np.ndarray:
        c = self.complex_of if genes is None else self.complex_of[np.asarray(genes)]
        rel = (c[:, None] == c[None, :]) & (c[:, None] >= 0)
        np.fill_diagonal(rel, False)
        return rel

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gene", "complex"])
        w.writerows([g, int(k)] for g, k in enumerate(self.complex_of))
        return buf.getvalue()

    def save(self, path) -> None:
        atomic_write(path, self.to_csv().encode("utf-8"))

    @classmethod
    def load(cls, path) -> "ComplexGraph":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        complex_of = np.full(len(rows), -1, dtype=np.int64)
        for r in rows:
            complex_of[int(r["gene"])] = int(r["complex"])
        return cls(complex_of)


def _unit(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def gene_effects(n_genes: int, complex_size: int, n_features: int, rng: np.random.Generator):
    """Effect vectors ``mu`` (row 0 = control) and complex assignment."""
    n_complex = n_genes // complex_size
    u = _unit(rng, n_complex, n_features)
    v = _unit(rng, n_genes, n_features)
    complex_of = np.concatenate([[-1], np.repeat(np.arange(n_complex), complex_size)])
    mu = np.zeros((n_genes + 1, n_features))
    mu[1:] = u[complex_of[1:]] + GENE_JITTER * v
    return mu, complex_of


def gen_ops_sim(G: int = 200, W: int = 8, cells_per_guide: int = 64, batch_strength: float = 1.0, seed: int = 0,
                complex_size: int = 5, n_features: int = 32, control_guides: int = 16,
                as_image: bool = False) -> tuple[Dataset, ComplexGraph]:
    """Generate the screen.

    ``y`` is the gene, ``e`` the well; ``extra`` holds ``gene``, ``guide`` and
    ``well``. Guides of gene ``g >= 1`` are ``4(g-1) .. 4(g-1)+3``; control
    guides follow at ``4G ..``. ``as_image`` maps the features through a
    fixed random linear map onto a 4x16x16 pseudo-image.
    """
    if G < complex_size or G % complex_size:
        raise ValueError(f"gen_ops_sim: G={G} is not a positive multiple of complex_size={complex_size}")
    if complex_size < 2:
        raise ValueError("gen_ops_sim: complex_size must be >= 2")
    if W < 2:
        raise ValueError(f"gen_ops_sim: need W >= 2 wells, got {W}")
    if cells_per_guide < 1 or control_guides < 1 or n_features < 1:
        raise ValueError("gen_ops_sim: cells_per_guide, control_guides and n_features must be >= 1")
    if batch_strength < 0:
        raise ValueError("gen_ops_sim: batch_strength must be non-negative")

    streams = {name: np.random.default_rng([int(seed), i]) for i, name in enumerate(("genes", "wells", "cells", "image"))}
    mu, complex_of = gene_effects(G, complex_size, n_features, streams["genes"])

    guide_gene = np.concatenate([np.repeat(np.arange(1, G + 1), GUIDES_PER_GENE), np.zeros(control_guides, np.int64)])
    jitter = GUIDE_JITTER * _unit(streams["genes"], len(guide_gene), n_features)
    guide_mu = mu[guide_gene] + jitter * (guide_gene > 0)[:, None]

    shift = batch_strength * SHIFT_SCALE * streams["wells"].standard_normal((W, n_features))
    gain = 1.0 + batch_strength * GAIN_SCALE * streams["wells"].standard_normal((W, n_features))

    guide = np.repeat(np.arange(len(guide_gene)), cells_per_guide)
    rng = streams["cells"]
    well = rng.integers(W, size=len(guide))
    noise = CELL_NOISE * rng.standard_normal((len(guide), n_features))
    x = guide_mu[guide] * gain[well] + shift[well] + noise
    if as_image:
        proj = streams["image"].standard_normal((n_features, int(np.prod(IMAGE_SHAPE)))) / np.sqrt(n_features)
        x = (x @ proj).reshape((-1,) + IMAGE_SHAPE)

    gene = guide_gene[guide]
    meta = {"generator": "ops-sim", "G": G, "W": W, "cells_per_guide": cells_per_guide,
            "batch_strength": batch_strength, "seed": seed, "complex_size": complex_size,
            "n_features": n_features, "control_guides": control_guides, "as_image": as_image}
    ds = Dataset(x.astype(np.float32), gene, well, {"gene": gene, "guide": guide, "well": well},
                 {k: str(v) for k, v in meta.items()})
    return ds, ComplexGraph(complex_of)


def save_graph(path, graph: ComplexGraph) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    graph.save(path)
