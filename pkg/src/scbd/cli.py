"""Command-line driver.

Every subcommand reads an optional INI config (``--config``) whose sections
mirror the flag groups below; explicit flags override file values, and the
resolved configuration is written next to the outputs together with a
manifest of artifact hashes.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .contrastive import ObjectiveConfig
from .datagen.cmnist import gen_cmnist, pooled_train
from .datagen.container import Dataset, atomic_write, load_dataset, save_dataset
from .datagen.opssim import ComplexGraph, gen_ops_sim
from .engine.checkpoint import CheckpointError, load_checkpoint
from .engine.train import ErmConfig, TrainConfig, TrainingDiverged, stream_rng, train_scbd
from .nets import ModelParams, ModelSpec

log = logging.getLogger("scbd")

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 2, 3
CMNIST_SPLITS = ("train_e0", "train_e1", "val", "test")
OPS_FILE, GRAPH_FILE = "ops.scbd", "complexes.csv"
VOLATILE = {"timing.csv", "manifest.json"}


class UsageError(Exception):
    """Bad arguments or missing inputs; maps to exit code 2."""


@dataclass(frozen=True)
class Opt:
    flag: str
    section: str
    key: str
    type: Callable
    default: Any
    help: str
    action: Optional[str] = None


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _floats(v) -> tuple:
    return tuple(float(a) for a in str(v).split(",") if a.strip()) if not isinstance(v, tuple) else v


def _ints(v) -> tuple:
    return tuple(int(a) for a in str(v).split(",") if a.strip()) if not isinstance(v, tuple) else v


MODEL_OPTS = [
    Opt("--arch", "model", "arch", str, "auto", "encoder family: conv, mlp or auto (conv for images)"),
    Opt("--d-zc", "model", "d_zc", int, 64, "z_c dimension"),
    Opt("--d-zs", "model", "d_zs", int, 64, "z_s dimension"),
    Opt("--hidden", "model", "hidden", int, 256, "MLP hidden width"),
    Opt("--widths", "model", "conv_widths", _ints, (32, 64, 64), "conv channel widths, comma separated"),
    Opt("--single-block", "model", "single_block", _bool, False, "omit z_s (single-block ablation)", "store_true"),
]
OBJECTIVE_OPTS = [
    Opt("--alpha", "objective", "alpha", float, 0.0, "invariance weight"),
    Opt("--tau", "objective", "tau", float, 0.1, "softmax temperature"),
    Opt("--zs-key", "objective", "zs_key", str, "e", "z_s positives: e or ye"),
    Opt("--diag-mode", "objective", "diag_mode", str, "mask_diagonal", "mask_diagonal or appendix_verbatim"),
    Opt("--no-recon", "objective", "recon_enabled", _bool, True, "disable the reconstruction term", "store_false"),
]
TRAIN_OPTS = [
    Opt("--lr", "train", "lr", float, 1e-3, "AdamW learning rate"),
    Opt("--wd", "train", "weight_decay", float, 0.01, "AdamW weight decay"),
    Opt("--batch-size", "train", "batch_size", int, 240, "minibatch size (shuffled batches)"),
    Opt("--k-classes", "train", "k_classes", int, 0, "labels per class-balanced batch (0: plain shuffling)"),
    Opt("--m-per-class", "train", "m_per_class", int, 0, "examples per label in a class-balanced batch"),
    Opt("--balance-on", "train", "balance_on", str, "y", "label used for balancing: y or ye"),
    Opt("--steps", "train", "max_steps", int, 3000, "maximum training steps"),
    Opt("--eval-every", "train", "eval_every", int, 100, "steps between validation evaluations"),
    Opt("--val-batches", "train", "val_batches", int, 4, "fixed validation batches"),
    Opt("--val-exclude-inv", "train", "val_include_invariance", _bool, True,
        "leave the invariance term out of the validation objective", "store_false"),
    Opt("--decoder-mode", "train", "decoder_mode", str, "concurrent", "concurrent or post_hoc"),
    Opt("--post-hoc-steps", "train", "post_hoc_steps", int, 0, "decoder-only steps in post_hoc mode"),
    Opt("--debug", "train", "debug", _bool, False, "assert the reconstruction term leaves encoders untouched", "store_true"),
]
SEED_OPT = Opt("--seed", "run", "seed", int, 0, "root seed for every random stream")
DATA_OPT = Opt("--data", "run", "data", str, None, "dataset directory written by gen-data")


# config resolution ----------------------------------------------------------

def _add_opts(p: argparse.ArgumentParser, opts: list[Opt], title: str) -> None:
    g = p.add_argument_group(title)
    for o in opts:
        if o.action:
            g.add_argument(o.flag, dest=f"{o.section}__{o.key}", action=o.action, default=None,
                           help=f"{o.help} [{o.section}] {o.key}")
        else:
            g.add_argument(o.flag, dest=f"{o.section}__{o.key}", default=None,
                           help=f"{o.help} (default {_fmt(o.default)}) [{o.section}] {o.key}")


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ",".join(str(a) for a in v)
    return str(v)


def resolve(args: argparse.Namespace, opts: list[Opt]) -> dict[str, dict[str, Any]]:
    """defaults < config file < flags."""
    file_cfg = configparser.ConfigParser()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        file_cfg.read(path, encoding="utf-8")
    out: dict[str, dict[str, Any]] = {}
    for o in opts:
        value = o.default
        if file_cfg.has_option(o.section, o.key):
            value = file_cfg.get(o.section, o.key)
        flag = getattr(args, f"{o.section}__{o.key}", None)
        if flag is not None:
            value = flag
        try:
            value = o.type(value) if value is not None else None
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{o.flag}: {exc}") from None
        out.setdefault(o.section, {})[o.key] = value
    return out


def config_text(cfg: dict) -> str:
    parser = configparser.ConfigParser()
    for section, values in cfg.items():
        parser[section] = {k: _fmt(v) for k, v in values.items() if v is not None}
    buf = []
    for section in parser.sections():
        buf.append(f"[{section}]")
        buf.extend(f"{k} = {v}" for k, v in parser[section].items())
        buf.append("")
    return "\n".join(buf)


def out_dir(args) -> Path:
    root = args.out or os.environ.get("SCBD_OUT") or "scbd_out"
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: dict) -> None:
    atomic_write(out / "config.ini", config_text(cfg).encode("utf-8"))
    artifacts = {}
    for p in sorted(out.rglob("*")):
        rel = p.relative_to(out).as_posix()
        if p.is_file() and rel not in VOLATILE:
            artifacts[rel] = sha256(p)
    manifest = {"command": command, "version": __version__, "seed": cfg.get("run", {}).get("seed"),
                "config": json.loads(json.dumps(cfg, default=list)), "artifacts": artifacts}
    atomic_write(out / "manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"))


# data access ------------------------------------------------------------------

def _need(path: Path) -> Path:
    if not path.exists():
        raise UsageError(f"missing input: {path}")
    return path


def load_cmnist_dir(path) -> dict[str, Dataset]:
    d = _need(Path(path))
    return {s: load_dataset(_need(d / f"{s}.scbd")) for s in CMNIST_SPLITS}


def load_training_data(path, seed: int) -> tuple[Dataset, Dataset, dict]:
    """(train, val, extras) for either a CMNIST directory or an ops-sim directory."""
    d = _need(Path(path))
    if (d / "train_e0.scbd").exists():
        splits = load_cmnist_dir(d)
        return pooled_train(splits), splits["val"], {"splits": splits}
    if (d / OPS_FILE).exists():
        ds = load_dataset(d / OPS_FILE)
        order = stream_rng(seed, "split").permutation(len(ds))
        n_val = max(len(ds) // 10, 2)
        return ds.subset(np.sort(order[n_val:])), ds.subset(np.sort(order[:n_val])), {"ops": ds}
    raise UsageError(f"{d}: expected CMNIST split files or {OPS_FILE}")


def build_train_config(cfg: dict, input_shape: tuple, n_classes: int = 0) -> TrainConfig:
    m = dict(cfg["model"])
    if m["arch"] == "auto":
        m["arch"] = "conv" if len(input_shape) == 3 and input_shape[1] % 8 == 0 and input_shape[2] % 8 == 0 else "mlp"
    try:
        spec = ModelSpec(input_shape=input_shape, decoder=cfg["objective"]["recon_enabled"], n_classes=n_classes, **m)
        obj = ObjectiveConfig(**cfg["objective"])
        return TrainConfig(objective=obj, model=spec, seed=cfg["run"]["seed"], **cfg["train"])
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


# subcommands ------------------------------------------------------------------

GEN_OPTS = [
    Opt("--n-per-env", "cmnist", "n_per_env", int, 5000, "examples per training environment"),
    Opt("--n-test", "cmnist", "n_test", int, None, "test examples (default n-per-env)"),
    Opt("--glyph-source", "cmnist", "glyph_source", str, "font", "font or mnist"),
    Opt("--mnist-images", "cmnist", "mnist_images", str, None, "IDX image file for glyph-source mnist"),
    Opt("--mnist-labels", "cmnist", "mnist_labels", str, None, "IDX label file for glyph-source mnist"),
    Opt("--genes", "ops", "G", int, 200, "perturbed genes"),
    Opt("--wells", "ops", "W", int, 8, "wells"),
    Opt("--cells-per-guide", "ops", "cells_per_guide", int, 64, "cells per guide"),
    Opt("--batch-strength", "ops", "batch_strength", float, 1.0, "well effect scale"),
    Opt("--complex-size", "ops", "complex_size", int, 5, "genes per complex"),
    Opt("--features", "ops", "n_features", int, 32, "feature dimension"),
    Opt("--control-guides", "ops", "control_guides", int, 16, "guides of the non-targeting control"),
    Opt("--image", "ops", "as_image", _bool, False, "emit 4x16x16 pseudo-images", "store_true"),
]


def cmd_gen_data(args) -> int:
    opts = GEN_OPTS + [SEED_OPT]
    cfg = resolve(args, opts)
    cfg["run"]["generator"] = args.generator
    out = out_dir(args)
    seed = cfg["run"]["seed"]
    if args.generator == "cmnist":
        c = cfg["cmnist"]
        paths = None
        if c["glyph_source"] == "mnist":
            if not (c["mnist_images"] and c["mnist_labels"]):
                raise UsageError("--glyph-source mnist needs --mnist-images and --mnist-labels")
            paths = (_need(Path(c["mnist_images"])), _need(Path(c["mnist_labels"])))
        try:
            splits = gen_cmnist(c["n_per_env"], seed=seed, glyph_source=c["glyph_source"], mnist_paths=paths,
                                n_test=c["n_test"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for name, ds in splits.items():
            save_dataset(out / f"{name}.scbd", ds)
        del cfg["ops"]
    else:
        try:
            ds, graph = gen_ops_sim(seed=seed, **cfg["ops"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        save_dataset(out / OPS_FILE, ds)
        graph.save(out / GRAPH_FILE)
        del cfg["cmnist"]
    write_manifest(out, f"gen-data {args.generator}", cfg)
    print(f"wrote {args.generator} data to {out}")
    return EXIT_OK


def _train_cfg(args) -> tuple[dict, TrainConfig, Dataset, Dataset, dict]:
    cfg = resolve(args, MODEL_OPTS + OBJECTIVE_OPTS + TRAIN_OPTS + [SEED_OPT, DATA_OPT])
    if not cfg["run"]["data"]:
        raise UsageError("--data is required")
    train, val, extras = load_training_data(cfg["run"]["data"], cfg["run"]["seed"])
    return cfg, build_train_config(cfg, train.x.shape[1:]), train, val, extras


def cmd_train(args) -> int:
    cfg, tcfg, train, val, _ = _train_cfg(args)
    out = out_dir(args)
    tcfg = replace(tcfg, checkpoint_path=str(out / "best.scbk"))
    res = train_scbd(tcfg, train, val, log_path=out / "metrics.csv", timing_path=out / "timing.csv")
    from .engine.checkpoint import save_checkpoint
    save_checkpoint(out / "last.scbk", res.last)
    write_manifest(out, "train", cfg)
    print(f"best validation objective {res.best_val:.6g} at step {res.best.step}; outputs in {out}")
    return EXIT_OK


def cmd_sweep_alpha(args) -> int:
    from .evalsuite.sweeps import sweep_alpha, write_csv
    cfg, tcfg, train, val, extras = _train_cfg(args)
    if "splits" not in extras:
        raise UsageError("sweep-alpha needs a CMNIST data directory")
    try:
        alphas = _floats(args.alphas)
    except ValueError as exc:
        raise UsageError(f"--alphas: {exc}") from None
    if not alphas:
        raise UsageError("--alphas must list at least one value")
    seeds = list(range(cfg["run"]["seed"], cfg["run"]["seed"] + args.seeds))
    cfg["sweep"] = {"alphas": alphas, "seeds": tuple(seeds)}
    out = out_dir(args)
    table = sweep_alpha(alphas, seeds, tcfg, train, val, extras["splits"]["test"], max_probe_train=args.probe_train)
    table.write(out / "sweep.csv", out / "sweep.svg")
    s = table.summary()
    write_csv(out / "sweep_summary.csv", ("alpha", "n", "val_mean", "val_sd", "test_mean", "test_sd"),
              [tuple(r.values()) for r in s])
    write_manifest(out, "sweep-alpha", cfg)
    for r in s:
        print(f"alpha={r['alpha']:g}  val {r['val_mean']:.3f}±{r['val_sd']:.3f}  test {r['test_mean']:.3f}±{r['test_sd']:.3f}")
    return EXIT_OK


ERM_OPTS = [
    Opt("--lrs", "erm", "lr", _floats, (1e-4, 1e-3, 1e-2), "learning-rate grid"),
    Opt("--wds", "erm", "weight_decay", _floats, (0.0, 1e-3, 1e-2), "weight-decay grid"),
    Opt("--epochs", "erm", "max_epochs", _ints, (1, 20, 100), "epoch-budget grid"),
    Opt("--erm-batch-size", "erm", "batch_size", int, 32, "ERM minibatch size"),
    Opt("--n-seeds", "erm", "n_seeds", int, 1, "seeds per grid point"),
]


def cmd_erm_scan(args) -> int:
    from .evalsuite.sweeps import erm_scan
    cfg = resolve(args, MODEL_OPTS + ERM_OPTS + [SEED_OPT, DATA_OPT])
    if not cfg["run"]["data"]:
        raise UsageError("--data is required")
    splits = load_cmnist_dir(cfg["run"]["data"])
    train = pooled_train(splits)
    m = dict(cfg["model"])
    shape = train.x.shape[1:]
    if m["arch"] == "auto":
        m["arch"] = "conv" if len(shape) == 3 else "mlp"
    n_classes = int(max(train.y.max(), splits["test"].y.max())) + 1
    e = cfg["erm"]
    try:
        ecfg = ErmConfig(model=ModelSpec(input_shape=shape, n_classes=n_classes, decoder=False, **m),
                         batch_size=e["batch_size"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    seeds = list(range(cfg["run"]["seed"], cfg["run"]["seed"] + e["n_seeds"]))
    grid = {"lr": e["lr"], "weight_decay": e["weight_decay"], "max_epochs": e["max_epochs"]}
    out = out_dir(args)
    res = erm_scan(grid, seeds, ecfg, train, splits["val"], splits["test"])
    res.write(out / "erm_scan.csv", out / "erm_scan.svg", out / "correlation.txt")
    write_manifest(out, "erm-scan", cfg)
    print(f"{len(res.rows)} points, pearson(val, test) = {res.correlation_text()}")
    return EXIT_OK


def cmd_eval_batchcorr(args) -> int:
    from .evalsuite.batchcorr import aggregate_gene_embeddings, batch_f1, corum_style_auprc
    from .evalsuite.probe import embed
    from .evalsuite.sweeps import write_csv
    cfg, tcfg, train, val, extras = _train_cfg(args)
    if "ops" not in extras:
        raise UsageError("eval-batchcorr needs an ops-sim data directory")
    ds = extras["ops"]
    graph = ComplexGraph.load(_need(Path(cfg["run"]["data"]) / GRAPH_FILE))
    out = out_dir(args)
    tcfg = replace(tcfg, checkpoint_path=str(out / "best.scbk"))
    res = train_scbd(tcfg, train, val, log_path=out / "metrics.csv", timing_path=out / "timing.csv")
    f1_idx = np.sort(stream_rng(cfg["run"]["seed"], "eval").choice(len(ds), min(len(ds), args.f1_cells), replace=False))
    reps = {"raw": ds.x.reshape(len(ds), -1), "z_c": embed(res.best_params, ds.x, "z_c")}
    rows, curves = [], []
    two_tailed = not args.one_tailed
    for name, feats in reps.items():
        table = aggregate_gene_embeddings(feats, ds.extra["guide"], ds.extra["gene"])
        pr = corum_style_auprc(table, graph, two_tailed=two_tailed)
        f1 = batch_f1(feats[f1_idx], ds.e[f1_idx], seed=cfg["run"]["seed"])
        rows.append((name, pr.area, f1))
        curves.extend((name,) + r for r in pr.rows())
    chance = 1.0 / len(np.unique(ds.e))
    write_csv(out / "batchcorr.csv", ("representation", "auprc", "well_f1"), rows)
    write_csv(out / "pr_curve.csv", ("representation", "percentile", "precision", "recall"), curves)
    cfg["eval"] = {"two_tailed": two_tailed, "f1_cells": args.f1_cells}
    write_manifest(out, "eval-batchcorr", cfg)
    for name, auprc, f1 in rows:
        print(f"{name:>4}: auprc {auprc:.4f}  well-F1 {f1:.3f} (chance {chance:.3f})")
    return EXIT_OK


def cmd_swap(args) -> int:
    from .evalsuite.probe import LinearProbe, embed
    from .evalsuite.swap import counterfactual_swap, cross_env_pairs, tile_grid, write_ppm
    from .evalsuite.sweeps import write_csv
    cfg = resolve(args, [SEED_OPT, DATA_OPT])
    if not cfg["run"]["data"]:
        raise UsageError("--data is required")
    try:
        ck = load_checkpoint(_need(Path(args.checkpoint)))
    except CheckpointError as exc:
        raise UsageError(str(exc)) from None
    spec_d = dict(ck.spec)
    spec = ModelSpec(**spec_d)
    params = ModelParams.from_numpy(spec, ck.params)
    splits = load_cmnist_dir(cfg["run"]["data"])
    pool = splits["val"]
    pairs = cross_env_pairs(pool.e, args.pairs, seed=cfg["run"]["seed"])
    train = pooled_train(splits)
    probe_idx = np.sort(stream_rng(cfg["run"]["seed"], "eval").choice(len(train), min(len(train), 4000), replace=False))
    probe = LinearProbe(seed=cfg["run"]["seed"]).fit(embed(params, train.x[probe_idx], "z_c"), train.y[probe_idx])
    try:
        res = counterfactual_swap(params, pool.x, pairs, probe)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = out_dir(args)
    write_ppm(out / "swap.ppm", tile_grid(res.tiles))
    write_csv(out / "swap.csv", ("a", "b", "hue_a", "hue_b", "hue_swap", "digit_kept", "digit_kept_source"),
              [(int(a), int(b), float(ha), float(hb), float(hs), bool(k), bool(ks))
               for (a, b), ha, hb, hs, k, ks in zip(res.pairs, res.hue_a, res.hue_b, res.hue_swap, res.digit_kept,
                                                    res.digit_kept_source)])
    cfg["swap"] = {"checkpoint": args.checkpoint, "pairs": args.pairs}
    write_manifest(out, "swap", cfg)
    print(f"side transfer {res.side_transfer:.3f}  hue transfer {res.hue_transfer:.3f}  digit kept {res.digit_retention:.3f}"
          f" (vs source image {res.source_retention:.3f})")
    return EXIT_OK


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scbd", description="Supervised contrastive block disentanglement toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def common(sp, data=True):
        sp.add_argument("--config", help="INI file with [section] key = value defaults")
        sp.add_argument("--out", help="output directory (default $SCBD_OUT or ./scbd_out)")
        _add_opts(sp, [SEED_OPT] + ([DATA_OPT] if data else []), "run")

    g = sub.add_parser("gen-data", help="generate a dataset", description="Write dataset containers and metadata.")
    g.add_argument("generator", choices=("cmnist", "ops-sim"))
    common(g, data=False)
    _add_opts(g, GEN_OPTS[:5], "cmnist")
    _add_opts(g, GEN_OPTS[5:], "ops-sim")
    g.set_defaults(func=cmd_gen_data)

    def training(sp):
        _add_opts(sp, MODEL_OPTS, "model")
        _add_opts(sp, OBJECTIVE_OPTS, "objective")
        _add_opts(sp, TRAIN_OPTS, "train")

    t = sub.add_parser("train", help="train SCBD", description="Train SCBD and keep the validation-selected weights.")
    common(t)
    training(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep-alpha", help="accuracy vs alpha", description="Train per (alpha, seed) and probe r_c.")
    common(s)
    s.add_argument("--alphas", default="0,8,64,192", help="comma-separated alpha values (default 0,8,64,192)")
    s.add_argument("--seeds", type=int, default=3, help="number of seeds, counting up from --seed (default 3)")
    s.add_argument("--probe-train", type=int, default=0, help="cap on probe training examples (0: all)")
    training(s)
    s.set_defaults(func=cmd_sweep_alpha)

    e = sub.add_parser("erm-scan", help="ERM val/test scan", description="ERM over a learning-rate x weight-decay x epoch grid.")
    common(e)
    _add_opts(e, MODEL_OPTS, "model")
    _add_opts(e, ERM_OPTS, "erm")
    e.set_defaults(func=cmd_erm_scan)

    b = sub.add_parser("eval-batchcorr", help="batch-correction metrics",
                       description="Train on ops-sim data, then score complex AUPRC and well F1 for raw features and z_c.")
    common(b)
    b.add_argument("--one-tailed", action="store_true", help="count only the upper similarity tail as related")
    b.add_argument("--f1-cells", type=int, default=20000, help="cells used for the well-F1 probe (default 20000)")
    training(b)
    b.set_defaults(func=cmd_eval_batchcorr)

    w = sub.add_parser("swap", help="counterfactual swaps", description="Decode z_c / z_s swaps for cross-environment pairs.")
    common(w)
    w.add_argument("--checkpoint", required=True, help="checkpoint written by train")
    w.add_argument("--pairs", type=int, default=50, help="number of pairs (default 50)")
    w.set_defaults(func=cmd_swap)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"scbd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"scbd {args.command}: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
