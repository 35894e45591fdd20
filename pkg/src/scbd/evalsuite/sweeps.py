"""α-sweeps over SCBD and hyperparameter scans over ERM."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from ..datagen.container import Dataset, atomic_write
from ..engine.train import ErmConfig, TrainConfig, train_erm, train_scbd
from .probe import LinearProbe, embed
from .svg import Series, line_plot, scatter_plot, write_svg

log = logging.getLogger(__name__)

ERM_GRID = {"lr": (1e-4, 1e-3, 1e-2), "weight_decay": (0.0, 1e-3, 1e-2), "max_epochs": (1, 20, 100)}


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows) -> None:
    atomic_write(path, csv_text(header, rows).encode("utf-8"))


def correlation(x, y, method: str = "pearson") -> Optional[float]:
    """Correlation coefficient, or ``None`` when it is undefined."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    fn = stats.pearsonr if method == "pearson" else stats.spearmanr
    return float(fn(x, y)[0])


# alpha sweep --------------------------------------------------------------

@dataclass
class SweepTable:
    rows: list[tuple[float, int, float, float]] = field(default_factory=list)  # alpha, seed, val, test

    HEADER = ("alpha", "seed", "val_accuracy", "test_accuracy")

    def alphas(self) -> list[float]:
        return sorted({r[0] for r in self.rows})

    def summary(self) -> list[dict]:
        out = []
        for a in self.alphas():
            sel = [r for r in self.rows if r[0] == a]
            v = np.array([r[2] for r in sel])
            t = np.array([r[3] for r in sel])
            out.append({"alpha": a, "n": len(sel), "val_mean": float(v.mean()), "val_sd": float(v.std(ddof=0)),
                        "test_mean": float(t.mean()), "test_sd": float(t.std(ddof=0))})
        return out

    def to_csv(self) -> str:
        return csv_text(self.HEADER, self.rows)

    def to_svg(self) -> str:
        s = self.summary()
        xs = [r["alpha"] for r in s]
        return line_plot([Series("ID val", xs, [r["val_mean"] for r in s], [r["val_sd"] for r in s]),
                          Series("OOD test", xs, [r["test_mean"] for r in s], [r["test_sd"] for r in s])],
                         "accuracy vs alpha", "alpha", "accuracy")

    def write(self, csv_path, svg_path=None) -> None:
        atomic_write(csv_path, self.to_csv().encode("utf-8"))
        if svg_path:
            write_svg(svg_path, self.to_svg())


def domain_accuracies(params, train: Dataset, val: Dataset, test: Dataset, probe_seed: int = 0,
                      max_probe_train: int = 0) -> tuple[float, float]:
    """Linear probe on r_c fit on training data; returns (val, test) accuracy."""
    x_tr, y_tr = train.x, train.y
    if max_probe_train and len(train) > max_probe_train:
        idx = np.sort(np.random.default_rng(probe_seed).choice(len(train), max_probe_train, replace=False))
        x_tr, y_tr = x_tr[idx], y_tr[idx]
    probe = LinearProbe(seed=probe_seed).fit(embed(params, x_tr, "r_c"), y_tr)
    return probe.score(embed(params, val.x, "r_c"), val.y), probe.score(embed(params, test.x, "r_c"), test.y)


def sweep_alpha(alphas: Sequence[float], seeds: Sequence[int], cfg: TrainConfig, train: Dataset, val: Dataset,
                test: Dataset, max_probe_train: int = 0) -> SweepTable:
    """Train one model per (alpha, seed) and record probe accuracies."""
    if not len(alphas):
        raise ValueError("sweep_alpha: alphas must be non-empty")
    table = SweepTable()
    for alpha, seed in product(alphas, seeds):
        run = replace(cfg, objective=replace(cfg.objective, alpha=float(alpha)), seed=int(seed), checkpoint_path=None)
        res = train_scbd(run, train, val)
        v, t = domain_accuracies(res.best_params, train, val, test, probe_seed=int(seed), max_probe_train=max_probe_train)
        log.info("alpha=%g seed=%d val=%.3f test=%.3f", alpha, seed, v, t)
        table.rows.append((float(alpha), int(seed), v, t))
    return table


# ERM scan -----------------------------------------------------------------

@dataclass
class ScanResult:
    rows: list[tuple[float, float, int, int, float, float]]  # lr, wd, max_epochs, seed, val, test
    pearson: Optional[float]

    HEADER = ("lr", "weight_decay", "max_epochs", "seed", "val_accuracy", "test_accuracy")

    def to_csv(self) -> str:
        return csv_text(self.HEADER, self.rows)

    def correlation_text(self) -> str:
        return "undefined" if self.pearson is None or math.isnan(self.pearson) else repr(self.pearson)

    def to_svg(self) -> str:
        return scatter_plot([r[4] for r in self.rows], [r[5] for r in self.rows],
                            f"ERM: pearson = {self.correlation_text()}", "val accuracy", "test accuracy")

    def write(self, csv_path, svg_path=None, corr_path=None) -> None:
        atomic_write(csv_path, self.to_csv().encode("utf-8"))
        if svg_path:
            write_svg(svg_path, self.to_svg())
        if corr_path:
            atomic_write(corr_path, f"pearson = {self.correlation_text()}\nn_points = {len(self.rows)}\n".encode())


def erm_scan(grid: dict, seeds: Sequence[int], cfg: ErmConfig, train: Dataset, val: Dataset, test: Dataset) -> ScanResult:
    """Validation-selected (val, test) accuracy per grid point and seed.

    Runs sharing (lr, weight decay, seed) differ only in their epoch budget,
    so one run to the largest budget is trained and each smaller budget reads
    the best validation epoch within its prefix. With deterministic training
    this equals training each budget separately.
    """
    lrs, wds, budgets = (tuple(grid[k]) for k in ("lr", "weight_decay", "max_epochs"))
    if not (lrs and wds and budgets):
        raise ValueError("erm_scan: every grid axis needs at least one value")
    rows = []
    for lr, wd, seed in product(lrs, wds, seeds):
        run = replace(cfg, lr=float(lr), weight_decay=float(wd), max_epochs=int(max(budgets)), seed=int(seed))
        res = train_erm(run, train, val, test)
        for budget in budgets:
            rec = res.select(int(budget))
            rows.append((float(lr), float(wd), int(budget), int(seed), rec["val_acc"], rec["test_acc"]))
            log.info("lr=%g wd=%g epochs=%d seed=%d val=%.3f test=%.3f", lr, wd, budget, seed, rec["val_acc"], rec["test_acc"])
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return ScanResult(rows, correlation([r[4] for r in rows], [r[5] for r in rows]))
