"""SCBD and ERM training loops with validation-based weight selection."""

from __future__ import annotations

import csv
import logging
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .. import ndcore as nd
from ..contrastive import ObjectiveConfig, scbd_objective
from ..datagen.container import Dataset
from ..datagen.sampler import BatchStream, LabeledBatch, balance_labels, balanced_indices
from ..nets import ModelParams, ModelSpec, classify, cross_entropy, decode, encode, init_params
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .optim import OptimState, adamw_step

log = logging.getLogger(__name__)

LOG_COLUMNS = ("step", "total", "sup_c", "sup_s", "inv", "recon", "val_objective")
DECODER_MODES = ("concurrent", "post_hoc")


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, last_good: Optional[Checkpoint] = None):
        super().__init__(message)
        self.last_good = last_good


def stream_rng(seed: int, name: str) -> np.random.Generator:
    """Named, independent random stream derived from one seed."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


@dataclass
class TrainConfig:
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    model: ModelSpec = field(default_factory=ModelSpec)
    lr: float = 1e-4
    weight_decay: float = 0.01
    batch_size: int = 256
    k_classes: int = 0  # >0: class-balanced batches of k_classes x m_per_class
    m_per_class: int = 0
    balance_on: str = "y"  # "ye": balance over (y, e) pairs instead of y
    max_steps: int = 3000
    eval_every: int = 100
    seed: int = 0
    val_batches: int = 4
    val_include_invariance: bool = True
    decoder_mode: str = "concurrent"
    post_hoc_steps: int = 0
    checkpoint_path: Optional[str] = None
    debug: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.decoder_mode not in DECODER_MODES:
            raise ValueError(f"decoder_mode must be one of {DECODER_MODES}")
        if self.k_classes and self.m_per_class < 2:
            raise ValueError("class-balanced batches need m_per_class >= 2")
        wants_decoder = self.objective.recon_enabled
        if self.model.decoder != wants_decoder:
            self.model = replace(self.model, decoder=wants_decoder)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checkpoint_path"] = None  # where a run writes is not part of what it is
        d["model"]["input_shape"] = list(self.model.input_shape)
        d["model"]["conv_widths"] = list(self.model.conv_widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["objective"] = ObjectiveConfig(**d["objective"])
        d["model"] = ModelSpec(**d["model"])
        return cls(**d)


@dataclass
class TrainResult:
    best: Checkpoint
    last: Checkpoint
    log: list[dict]
    best_params: ModelParams

    @property
    def best_val(self) -> float:
        return float(self.best.info["val_objective"])


# helpers ------------------------------------------------------------------

def frozen(params: ModelParams) -> ModelParams:
    return ModelParams(params.spec, {k: nd.stop_gradient(v) for k, v in params.arrays.items()})


def _apply(params: ModelParams, new: dict[str, np.ndarray]) -> ModelParams:
    arrays = {}
    for k, v in params.arrays.items():
        if k in new and new[k] is not v.data:
            a = nd.Array._wrap(new[k], None)
            a.requires_grad = True
            a.name = k
            arrays[k] = a
        else:
            arrays[k] = v
    return ModelParams(params.spec, arrays)


def _objective(params: ModelParams, batch: LabeledBatch, obj: ObjectiveConfig):
    emb = encode(params, batch.x)
    decode_fn = None
    if obj.recon_enabled and params.spec.decoder:
        def decode_fn(z_c, z_s):
            return decode(params, z_c, z_s)
    return scbd_objective(batch, emb, decode_fn, obj)


def _val_batches(ds: Dataset, cfg: TrainConfig) -> list[LabeledBatch]:
    rng = stream_rng(cfg.seed, "eval")
    out = []
    if cfg.k_classes:
        labels = ds.y if cfg.balance_on == "y" else balance_labels(ds.y, ds.e)
        for _ in range(cfg.val_batches):
            idx = balanced_indices(labels, cfg.k_classes, cfg.m_per_class, rng)
            out.append(LabeledBatch(ds.x[idx], ds.y[idx], ds.e[idx], idx))
        return out
    order = rng.permutation(len(ds))
    size = min(cfg.batch_size, len(ds))
    for i in range(min(cfg.val_batches, max(len(ds) // size, 1))):
        idx = np.sort(order[i * size:(i + 1) * size])
        out.append(LabeledBatch(ds.x[idx], ds.y[idx], ds.e[idx], idx))
    return out


def validation_objective(params: ModelParams, batches: list[LabeledBatch], obj: ObjectiveConfig,
                         include_invariance: bool = True) -> float:
    fp = frozen(params)
    values = []
    for b in batches:
        total, terms = _objective(fp, b, obj)
        value = total.item()
        if not include_invariance and "inv" in terms and obj.alpha > 0:
            value -= obj.alpha * terms["inv"].item()
        values.append(value)
    return float(np.mean(values))


def _float(x) -> str:
    return "" if x is None else repr(float(x))


def write_log_csv(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in rows:
            w.writerow([r["step"]] + [_float(r.get(c)) for c in LOG_COLUMNS[1:]])


# SCBD ---------------------------------------------------------------------

def _checkpoint(params: ModelParams, state: OptimState, step: int, cfg: TrainConfig, rng, stream: BatchStream,
                info: dict, best: Optional[dict] = None) -> Checkpoint:
    moments = {f"m/{k}": v for k, v in state.m.items()}
    moments.update({f"v/{k}": v for k, v in state.v.items()})
    optim = {k: getattr(state, k) for k in ("lr", "weight_decay", "beta1", "beta2", "eps", "step", "skipped")}
    extra = {"stream/order": np.asarray(stream._order, dtype=np.int64),
             "stream/pos_epoch": np.array([stream._pos, stream.epoch], dtype=np.int64)}
    if best:
        extra.update({f"best/{k}": v for k, v in best.items()})
    return Checkpoint(params=params.to_numpy(), step=step, spec=cfg.to_dict()["model"], config=cfg.to_dict(),
                      optim=optim, moments=moments, rng=rng.bit_generator.state, extra=extra, info=info)


def _restore(ck: Checkpoint, cfg: TrainConfig, rng, stream: BatchStream):
    params = ModelParams.from_numpy(cfg.model, ck.params)
    state = OptimState(**ck.optim)
    for key, arr in ck.moments.items():
        kind, name = key.split("/", 1)
        (state.m if kind == "m" else state.v)[name] = arr.copy()
    rng.bit_generator.state = ck.rng
    stream._order = ck.extra["stream/order"].copy()
    stream._pos, stream.epoch = (int(v) for v in ck.extra["stream/pos_epoch"])
    best = {k[5:]: v.copy() for k, v in ck.extra.items() if k.startswith("best/")}
    return params, state, best


def train_scbd(cfg: TrainConfig, train: Dataset, val: Dataset, resume: Optional[Checkpoint] = None,
               log_path=None, timing_path=None, stop_at: Optional[int] = None, callback=None) -> TrainResult:
    """Optimize the SCBD objective and return the validation-selected weights.

    ``stop_at`` ends the loop early (after that many total steps) without
    changing any random stream, which is how resume equivalence is tested.
    ``callback(step, params, row)`` runs after every evaluation.
    """
    obj = cfg.objective
    if cfg.decoder_mode == "post_hoc":
        obj = replace(obj, recon_enabled=False)
    if obj.alpha > 0 and len(np.unique(train.e)) < 2:
        raise ValueError("train_scbd: alpha > 0 needs at least two training environments")
    rng = stream_rng(cfg.seed, "train")
    stream = BatchStream(train, cfg.batch_size, rng, cfg.k_classes, cfg.m_per_class, cfg.balance_on)
    val_batches = _val_batches(val, cfg)

    if resume is None:
        params = init_params(cfg.seed, cfg.model)
        state = OptimState(lr=cfg.lr, weight_decay=cfg.weight_decay)
        step = 0
        best: dict = {}
        rows: list[dict] = []
        best_info = {"val_objective": float("inf"), "step": 0}
    else:
        params, state, best = _restore(resume, cfg, rng, stream)
        step = resume.step
        rows = list(resume.info.get("log", []))
        best_info = {"val_objective": resume.info.get("best_val", float("inf")), "step": resume.info.get("best_step", 0)}

    names = list(params.arrays)
    t0 = time.perf_counter()
    timing = []
    last_good = None
    end = cfg.max_steps if stop_at is None else min(stop_at, cfg.max_steps)
    while step < end:
        batch = stream.next()
        try:
            total, terms = _objective(params, batch, obj)
            grads = nd.backward(total, [params.arrays[n] for n in names])
        except nd.NonFiniteError as exc:
            raise TrainingDiverged(f"step {step + 1}: {exc}", last_good) from exc
        if cfg.debug and "recon" in terms:
            _assert_recon_isolated(params, terms["recon"])
        params = _apply(params, adamw_step(params.to_numpy_view(), dict(zip(names, grads)), state))
        step += 1
        row = {"step": step, "total": total.item(), **{k: v.item() for k, v in terms.items()}}
        if step % cfg.eval_every == 0 or step == cfg.max_steps:
            try:
                v = validation_objective(params, val_batches, obj, cfg.val_include_invariance)
            except nd.NonFiniteError as exc:
                raise TrainingDiverged(f"validation at step {step}: {exc}", last_good) from exc
            row["val_objective"] = v
            if v < best_info["val_objective"]:
                best_info = {"val_objective": v, "step": step}
                best = params.to_numpy()
            last_good = Checkpoint(params=dict(best), step=best_info["step"], spec=cfg.to_dict()["model"],
                                   config=cfg.to_dict(), info=dict(best_info))
            log.info("step %d  train %.4f  val %.4f", step, row["total"], v)
            if callback is not None:
                callback(step, params, row)
        rows.append(row)
        timing.append((step, time.perf_counter() - t0))

    info = {"best_val": best_info["val_objective"], "best_step": best_info["step"], "log": rows}
    last = _checkpoint(params, state, step, cfg, rng, stream, info, best)
    if not best:
        best, best_info = params.to_numpy(), {"val_objective": float("nan"), "step": step}
    best_params = ModelParams.from_numpy(cfg.model, best)

    if cfg.decoder_mode == "post_hoc" and cfg.objective.recon_enabled and stop_at is None:
        best_params = _fit_decoder(best_params, cfg, stream)
        best = best_params.to_numpy()

    best_ck = Checkpoint(params=best, step=best_info["step"], spec=cfg.to_dict()["model"], config=cfg.to_dict(),
                         info={"val_objective": best_info["val_objective"], "step": best_info["step"]})
    if cfg.checkpoint_path:
        save_checkpoint(cfg.checkpoint_path, best_ck)
    if log_path:
        write_log_csv(log_path, rows)
    if timing_path:
        Path(timing_path).parent.mkdir(parents=True, exist_ok=True)
        with open(timing_path, "w", encoding="utf-8") as fh:
            fh.write("step,wall_clock\n" + "".join(f"{s},{t:.6f}\n" for s, t in timing))
    return TrainResult(best=best_ck, last=last, log=rows, best_params=best_params)


def _assert_recon_isolated(params: ModelParams, recon: nd.Array) -> None:
    enc_names = [n for n in params.arrays if not n.startswith("dec")]
    grads = nd.backward(recon, [params.arrays[n] for n in enc_names])
    for name, g in zip(enc_names, grads):
        if np.any(g != 0):
            raise AssertionError(f"reconstruction term leaked gradient into {name}")


def _fit_decoder(params: ModelParams, cfg: TrainConfig, stream: BatchStream) -> ModelParams:
    """Train only the decoder on frozen embeddings."""
    dec_names = [n for n in params.arrays if n.startswith("dec")]
    state = OptimState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    enc = frozen(params)
    for _ in range(cfg.post_hoc_steps):
        batch = stream.next()
        emb = encode(enc, batch.x)
        x_hat = decode(params, emb.z_c, emb.z_s)
        loss = nd.mean((x_hat - nd.Array(batch.x)) * (x_hat - nd.Array(batch.x)))
        grads = nd.backward(loss, [params.arrays[n] for n in dec_names])
        new = adamw_step({n: params.arrays[n].data for n in dec_names}, dict(zip(dec_names, grads)), state)
        params = _apply(params, new)
    return params


def resume_scbd(path, train: Dataset, val: Dataset, **kwargs) -> TrainResult:
    ck = load_checkpoint(path)
    return train_scbd(TrainConfig.from_dict(ck.config), train, val, resume=ck, **kwargs)


# ERM ----------------------------------------------------------------------

@dataclass
class ErmConfig:
    model: ModelSpec = field(default_factory=lambda: ModelSpec(decoder=False, single_block=True, n_classes=10))
    lr: float = 1e-3
    weight_decay: float = 0.0
    batch_size: int = 32
    max_epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.model.n_classes < 2:
            raise ValueError("ERM needs a classification head with >= 2 classes")
        self.model = replace(self.model, decoder=False, single_block=True)


@dataclass
class ErmResult:
    best_params: ModelParams
    best_epoch: int
    history: list[dict]  # per epoch: epoch, train_loss, val_acc, test_acc

    def select(self, max_epochs: int) -> dict:
        """Validation-selected record among the first ``max_epochs`` epochs."""
        window = [h for h in self.history if h["epoch"] <= max_epochs]
        return max(window, key=lambda h: (h["val_acc"], -h["epoch"]))


def predict(params: ModelParams, x: np.ndarray, batch: int = 512) -> np.ndarray:
    fp = frozen(params)
    out = [np.argmax(classify(fp, x[i:i + batch]).data, axis=1) for i in range(0, len(x), batch)]
    return np.concatenate(out)


def accuracy(params: ModelParams, ds: Dataset) -> float:
    return float(np.mean(predict(params, ds.x) == ds.y))


def train_erm(cfg: ErmConfig, train: Dataset, val: Dataset, test: Optional[Dataset] = None) -> ErmResult:
    """Cross-entropy on pooled environments; one validation point per epoch."""
    rng = stream_rng(cfg.seed, "train")
    params = init_params(cfg.seed, cfg.model)
    state = OptimState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    names = list(params.arrays)
    steps_per_epoch = max(len(train) // cfg.batch_size, 1)
    history, best, best_acc, best_epoch = [], params.to_numpy(), -1.0, 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train))
        losses = []
        for s in range(steps_per_epoch):
            idx = order[s * cfg.batch_size:(s + 1) * cfg.batch_size]
            try:
                loss = cross_entropy(classify(params, train.x[idx]), train.y[idx])
                grads = nd.backward(loss, [params.arrays[n] for n in names])
            except nd.NonFiniteError as exc:
                raise TrainingDiverged(f"ERM epoch {epoch}: {exc}") from exc
            params = _apply(params, adamw_step(params.to_numpy_view(), dict(zip(names, grads)), state))
            losses.append(loss.item())
        rec = {"epoch": epoch, "train_loss": float(np.mean(losses)), "val_acc": accuracy(params, val),
               "test_acc": accuracy(params, test) if test is not None else float("nan")}
        history.append(rec)
        if rec["val_acc"] > best_acc:
            best_acc, best_epoch, best = rec["val_acc"], epoch, params.to_numpy()
    return ErmResult(ModelParams.from_numpy(cfg.model, best), best_epoch, history)
