import math

import numpy as np
import pytest

from scbd import ndcore as nd
from scbd.contrastive import ObjectiveConfig, supcon_loss
from scbd.datagen import Dataset
from scbd.engine import (
    Checkpoint,
    CheckpointError,
    ErmConfig,
    OptimState,
    TrainConfig,
    TrainingDiverged,
    accuracy,
    adamw_step,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    resume_scbd,
    save_checkpoint,
    train_erm,
    train_scbd,
    write_log_csv,
)
from scbd.nets import ModelSpec, encode


def blobs(n=240, seed=0, d=8):
    centers = np.random.default_rng(99).normal(size=(4, d)) * 3
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 4, n)
    e = rng.integers(0, 2, n)
    x = centers[y] + rng.normal(size=(n, d)) + e[:, None] * 0.5
    return Dataset(x, y, e)


def tiny_cfg(**kw):
    base = dict(objective=ObjectiveConfig(alpha=1.0, recon_enabled=True),
                model=ModelSpec(arch="mlp", input_shape=(8,), d_zc=4, d_zs=4, hidden=16),
                lr=1e-3, batch_size=32, max_steps=40, eval_every=10, seed=0)
    base.update(kw)
    return TrainConfig(**base)


# adamw --------------------------------------------------------------------

def test_adamw_first_step_moves_by_lr():
    st = OptimState(lr=1e-3, weight_decay=0.0)
    p = {"w": np.array([1.0])}
    out = adamw_step(p, {"w": np.array([0.3])}, st)
    # bias-corrected first step: m_hat = g, v_hat = g^2
    want = 1.0 - 1e-3 * 0.3 / (math.sqrt(0.09) + 1e-8)
    assert out["w"][0] == pytest.approx(want, abs=1e-15)
    assert 1.0 - out["w"][0] == pytest.approx(1e-3, rel=1e-6)


def test_adamw_pure_decay():
    st = OptimState(lr=1e-4, weight_decay=0.01)
    p = {"w": np.array([2.0, -3.0])}
    out = adamw_step(p, {"w": np.zeros(2)}, st)
    np.testing.assert_allclose(out["w"], p["w"] * (1 - 1e-6), rtol=0, atol=1e-15)


def test_adamw_deterministic():
    rng = np.random.default_rng(0)
    gs = [rng.normal(size=3).astype(np.float32) for _ in range(5)]

    def run():
        st, p = OptimState(), {"w": np.ones(3, np.float32)}
        for g in gs:
            p = adamw_step(p, {"w": g}, st)
        return p["w"].tobytes()

    assert run() == run()


def test_adamw_skips_non_finite():
    st = OptimState()
    p = {"w": np.ones(2)}
    out = adamw_step(p, {"w": np.array([np.nan, 1.0])}, st)
    assert out is p and st.skipped == 1 and st.step == 0


def test_adamw_shape_check():
    with pytest.raises(ValueError, match="shape"):
        adamw_step({"w": np.ones(2)}, {"w": np.ones(3)}, OptimState())


# checkpoint ---------------------------------------------------------------

def _ck():
    rng = np.random.default_rng(1)
    return Checkpoint(params={"a": rng.normal(size=(2, 3)).astype(np.float32), "b": np.arange(3, dtype=np.float32)},
                      step=7, spec={"arch": "mlp"}, config={"lr": 0.1}, optim={"step": 7},
                      moments={"m/a": np.zeros((2, 3), np.float32)}, rng={"state": 1},
                      extra={"stream/order": np.arange(4)}, info={"val_objective": 1.5})


def test_checkpoint_save_load_save_identical(tmp_path):
    save_checkpoint(tmp_path / "a.scbk", _ck())
    save_checkpoint(tmp_path / "b.scbk", load_checkpoint(tmp_path / "a.scbk"))
    assert (tmp_path / "a.scbk").read_bytes() == (tmp_path / "b.scbk").read_bytes()


def test_checkpoint_errors():
    raw = encode_checkpoint(_ck())
    with pytest.raises(CheckpointError, match="expected b'SCBK'"):
        decode_checkpoint(b"SCBD" + raw[4:])
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(raw[:4] + (9).to_bytes(4, "little") + raw[8:])
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(raw[:-1])


# training -----------------------------------------------------------------

def test_config_defaults_and_validation():
    c = TrainConfig()
    assert (c.objective.tau, c.objective.alpha, c.lr, c.weight_decay) == (0.1, 0.0, 1e-4, 0.01)
    assert (c.batch_size, c.max_steps, c.eval_every) == (256, 3000, 100)
    with pytest.raises(ValueError):
        TrainConfig(max_steps=0)
    assert TrainConfig.from_dict(tiny_cfg().to_dict()) == tiny_cfg()


def test_supcon_decreases_on_blobs():
    tr, va = blobs(seed=0), blobs(seed=1)
    cfg = tiny_cfg(max_steps=200, eval_every=50, objective=ObjectiveConfig(alpha=0.0, recon_enabled=False))
    from scbd.nets import init_params

    before = supcon_loss(encode(init_params(0, cfg.model), tr.x).z_c, tr.y).item()
    res = train_scbd(cfg, tr, va)
    after = supcon_loss(encode(res.best_params, tr.x).z_c, tr.y).item()
    assert after < before


def test_single_block_objective():
    cfg = tiny_cfg(model=ModelSpec(arch="mlp", input_shape=(8,), d_zc=4, hidden=16, single_block=True),
                   objective=ObjectiveConfig(alpha=2.0, recon_enabled=False), max_steps=5, eval_every=5)
    res = train_scbd(cfg, blobs(), blobs(seed=1))
    row = res.log[0]
    assert "sup_s" not in row
    assert row["total"] == pytest.approx(row["sup_c"] + 2.0 * row["inv"], rel=1e-5)


def test_best_is_minimum_of_logged_validation():
    res = train_scbd(tiny_cfg(), blobs(), blobs(seed=1))
    vals = [r["val_objective"] for r in res.log if "val_objective" in r]
    assert len(vals) == 4 and res.best_val == min(vals)


def test_metrics_bit_identical(tmp_path):
    tr, va = blobs(), blobs(seed=1)
    train_scbd(tiny_cfg(), tr, va, log_path=tmp_path / "a.csv")
    train_scbd(tiny_cfg(), tr, va, log_path=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_resume_reproduces_losses(tmp_path):
    tr, va = blobs(), blobs(seed=1)
    cfg = tiny_cfg(k_classes=4, m_per_class=8)
    full = train_scbd(cfg, tr, va)
    part = train_scbd(cfg, tr, va, stop_at=15)
    save_checkpoint(tmp_path / "mid.scbk", part.last)
    resumed = resume_scbd(tmp_path / "mid.scbk", tr, va)
    assert [r["total"] for r in resumed.log] == [r["total"] for r in full.log]
    assert all(resumed.best.params[k].tobytes() == full.best.params[k].tobytes() for k in full.best.params)


def test_resume_shuffled_stream(tmp_path):
    tr, va = blobs(), blobs(seed=1)
    cfg = tiny_cfg(max_steps=30)
    full = train_scbd(cfg, tr, va)
    part = train_scbd(cfg, tr, va, stop_at=11)
    resumed = train_scbd(cfg, tr, va, resume=decode_checkpoint(encode_checkpoint(part.last)))
    assert [r["total"] for r in resumed.log] == [r["total"] for r in full.log]


def test_debug_mode_checks_recon_isolation():
    train_scbd(tiny_cfg(debug=True, max_steps=3), blobs(), blobs(seed=1))


def test_alpha_needs_two_envs():
    tr = blobs()
    one_env = Dataset(tr.x, tr.y, np.zeros(len(tr)))
    with pytest.raises(ValueError, match="two training environments"):
        train_scbd(tiny_cfg(), one_env, one_env)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_last_good():
    tr = blobs()
    huge = Dataset(tr.x * 1e30, tr.y, tr.e)
    with pytest.raises(TrainingDiverged):
        train_scbd(tiny_cfg(), huge, huge)


def test_post_hoc_decoder_changes_only_decoder():
    tr, va = blobs(), blobs(seed=1)
    a = train_scbd(tiny_cfg(decoder_mode="post_hoc", post_hoc_steps=0), tr, va)
    b = train_scbd(tiny_cfg(decoder_mode="post_hoc", post_hoc_steps=20), tr, va)
    for k in a.best.params:
        same = a.best.params[k].tobytes() == b.best.params[k].tobytes()
        assert same != k.startswith("dec")


def test_log_csv_format(tmp_path):
    write_log_csv(tmp_path / "m.csv", [{"step": 1, "total": 0.5, "sup_c": 0.25}])
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "step,total,sup_c,sup_s,inv,recon,val_objective"
    assert lines[1] == "1,0.5,0.25,,,,"


# ERM ----------------------------------------------------------------------

def erm_cfg(**kw):
    base = dict(model=ModelSpec(arch="mlp", input_shape=(8,), hidden=16, n_classes=4), lr=1e-2, max_epochs=5)
    base.update(kw)
    return ErmConfig(**base)


def test_erm_fits_training_data():
    tr, va = blobs(), blobs(seed=1)
    res = train_erm(erm_cfg(), tr, va)
    assert accuracy(res.best_params, tr) > 0.9
    assert len(res.history) == 5


def test_erm_select_prefix():
    res = train_erm(erm_cfg(), blobs(), blobs(seed=1), blobs(seed=2))
    rec = res.select(1)
    assert rec["epoch"] == 1 and "test_acc" in rec
    best = res.select(5)
    assert best["val_acc"] == max(h["val_acc"] for h in res.history)


def test_erm_seeds():
    tr, va = blobs(), blobs(seed=1)
    a = train_erm(erm_cfg(seed=0), tr, va, tr).history
    b = train_erm(erm_cfg(seed=0), tr, va, tr).history
    c = train_erm(erm_cfg(seed=1), tr, va, tr).history
    assert a == b and a != c


def test_erm_needs_classes():
    with pytest.raises(ValueError):
        ErmConfig(model=ModelSpec(n_classes=0))
