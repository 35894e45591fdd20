import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from scbd.contrastive import ObjectiveConfig
from scbd.datagen import ComplexGraph, Dataset, gen_ops_sim
from scbd.engine import ErmConfig, TrainConfig
from scbd.evalsuite import (
    PERCENTILES,
    GeneEmbeddingTable,
    LinearProbe,
    embed,
    ScanResult,
    SweepTable,
    aggregate_gene_embeddings,
    batch_f1,
    correlation,
    corum_style_auprc,
    counterfactual_swap,
    cross_env_pairs,
    decode_ppm,
    encode_ppm,
    erm_scan,
    foreground_hue,
    probe_accuracy,
    sweep_alpha,
    tile_grid,
)
from scbd.evalsuite.svg import Series, line_plot, scatter_plot
from scbd.nets import ModelSpec, init_params


@pytest.fixture(scope="module")
def graph200():
    return gen_ops_sim(G=200, W=2, cells_per_guide=1)[1]


def table(z):
    return GeneEmbeddingTable(np.arange(len(z)), z, np.zeros(z.shape[1], bool))


# probes -------------------------------------------------------------------

def test_probe_separable_blobs():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, 300)
    x = np.eye(3)[y] * 10 + rng.normal(size=(300, 3)) * 0.1
    assert probe_accuracy(x[:200], y[:200], x[200:], y[200:]) == 1.0


def test_probe_shuffled_labels_at_chance():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2000, 5))
    y = rng.integers(0, 4, 2000)
    acc = probe_accuracy(x[:1000], y[:1000], x[1000:], y[1000:])
    assert abs(acc - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / 1000)


def test_probe_deterministic_and_errors():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(50, 3)), rng.integers(0, 2, 50)
    assert (LinearProbe(3).fit(x, y).predict(x) == LinearProbe(3).fit(x, y).predict(x)).all()
    with pytest.raises(ValueError, match="single class"):
        LinearProbe().fit(x, np.zeros(50))
    with pytest.raises(ValueError, match="disjoint"):
        probe_accuracy(x, y, x, y)


# aggregation --------------------------------------------------------------

def test_aggregate_definition_pre_standardization():
    # gene 1: guides with means u and v; control gene 0 at the origin; gene 2 elsewhere
    z = np.array([[1.0, 0.0], [3.0, 0.0], [0.0, 4.0], [0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
    guide = np.array([0, 0, 1, 2, 2, 3])
    gene = np.array([1, 1, 1, 0, 0, 2])
    t = aggregate_gene_embeddings(z, guide, gene)
    raw = np.array([[0.0, 0.0], [(2.0 + 0.0) / 2, (0.0 + 4.0) / 2], [5.0, 5.0]])  # control, (u+v)/2, gene 2
    want = (raw - raw.mean(0)) / raw.std(0)
    np.testing.assert_allclose(t.embeddings, want, atol=1e-12)


def test_aggregate_control_maps_to_zero_before_standardizing():
    rng = np.random.default_rng(3)
    z = rng.normal(size=(40, 3)) + 7
    gene = np.repeat(np.arange(4), 10)
    guide = np.repeat(np.arange(8), 5)
    t = aggregate_gene_embeddings(z, guide, gene)
    # undo standardization: control row sits at -mean/sd
    assert np.allclose(t.embeddings.mean(0), 0, atol=1e-12)
    assert np.allclose(t.embeddings.var(0), 1, atol=1e-3)


def test_aggregate_identical_cells_zero_variance(caplog):
    z = np.ones((12, 4))
    t = aggregate_gene_embeddings(z, np.arange(12) // 2, np.arange(12) // 4)
    assert t.zero_variance.all() and not t.embeddings.any()
    assert "zero-variance" in caplog.text


def test_aggregate_missing_control():
    with pytest.raises(ValueError, match="control"):
        aggregate_gene_embeddings(np.ones((2, 2)), [0, 1], [1, 2])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 12), st.integers(1, 6))
def test_aggregate_standardized(seed, n_genes, d):
    rng = np.random.default_rng(seed)
    gene = np.repeat(np.arange(n_genes), 6)
    guide = np.repeat(np.arange(n_genes * 2), 3)
    t = aggregate_gene_embeddings(rng.normal(size=(len(gene), d)), guide, gene)
    assert np.abs(t.embeddings.mean(0)).max() <= 1e-5
    assert np.abs(t.embeddings.var(0) - 1).max() <= 1e-3


# AUPRC --------------------------------------------------------------------

def test_auprc_extreme_threshold(graph200):
    c = corum_style_auprc(table(np.random.default_rng(4).normal(size=(201, 16))), graph200)
    assert c.thresholds[-1] == 100 and c.recall[-1] <= 0.01


def test_auprc_one_hot_is_perfect(graph200):
    z = np.zeros((201, 41))
    z[0, 40] = 1.0
    z[np.arange(1, 201), graph200.complex_of[1:]] = 1.0
    # upper tail only: the lower tail of a one-hot code is a 98% tie at cosine 0
    assert corum_style_auprc(table(z), graph200, two_tailed=False).area == pytest.approx(1.0)


def test_auprc_random_near_base_rate(graph200):
    areas = [corum_style_auprc(table(np.random.default_rng(s).normal(size=(201, 64))), graph200).area
             for s in range(20)]
    base = 400 / (200 * 199 / 2)
    assert base == pytest.approx(0.0201, abs=1e-4)
    # Monte-Carlo band: per-seed sd ~0.0042, 20 seeds
    assert abs(np.mean(areas) - base) <= 3 * 0.0042 / np.sqrt(20) + 1e-3


def test_auprc_rotation_invariant(graph200):
    rng = np.random.default_rng(5)
    z = rng.normal(size=(201, 8))
    q = special_ortho_group.rvs(8, random_state=6)
    for tails in (True, False):
        a = corum_style_auprc(table(z), graph200, two_tailed=tails)
        b = corum_style_auprc(table(z @ q), graph200, two_tailed=tails)
        assert abs(a.area - b.area) <= 1e-6


def test_auprc_recall_monotone_and_bounded(graph200):
    c = corum_style_auprc(table(np.random.default_rng(7).normal(size=(201, 8))), graph200, two_tailed=False)
    assert (np.diff(c.recall) <= 0).all()
    assert ((0 <= c.precision) & (c.precision <= 1)).all()
    assert list(c.thresholds) == list(PERCENTILES)


def test_auprc_needs_two_complexes():
    g = ComplexGraph(np.array([-1, 0, 0, 0]))
    with pytest.raises(ValueError, match="2 complexes"):
        corum_style_auprc(table(np.eye(4)), g)


# batch F1 -----------------------------------------------------------------

def test_f1_one_hot():
    e = np.arange(400) % 8
    assert batch_f1(np.eye(8)[e], e) == 1.0


def test_f1_independent_near_chance():
    rng = np.random.default_rng(8)
    x, e = rng.normal(size=(4000, 6)), rng.integers(0, 8, 4000)
    assert abs(batch_f1(x, e) - 1 / 8) <= 0.05


def test_f1_shuffles_concentrate_at_chance():
    rng = np.random.default_rng(9)
    e = np.arange(2000) % 4
    x = np.eye(4)[e] + rng.normal(size=(2000, 4)) * 0.1
    scores = [batch_f1(x, rng.permutation(e), seed=s) for s in range(20)]
    assert abs(np.mean(scores) - 0.25) <= 0.05


def test_f1_deterministic_and_errors():
    rng = np.random.default_rng(10)
    x, e = rng.normal(size=(200, 3)), rng.integers(0, 3, 200)
    assert batch_f1(x, e, seed=1) == batch_f1(x, e, seed=1)
    with pytest.raises(ValueError, match="2 wells"):
        batch_f1(x, np.zeros(200))


# sweeps -------------------------------------------------------------------

def _blob_sets():
    centers = np.random.default_rng(99).normal(size=(4, 8)) * 3

    def make(seed, env):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 4, 160)
        e = np.full(160, env) if env is not None else rng.integers(0, 2, 160)
        return Dataset(centers[y] + rng.normal(size=(160, 8)), y, e)

    return make(0, None), make(1, None), make(2, 2)


def test_sweep_alpha_rows_and_purity():
    tr, va, te = _blob_sets()
    cfg = TrainConfig(objective=ObjectiveConfig(recon_enabled=False), lr=1e-3, batch_size=32, max_steps=6,
                      eval_every=3, model=ModelSpec(arch="mlp", input_shape=(8,), hidden=8, d_zc=4, d_zs=4))
    a = sweep_alpha([0, 192], [0, 1], cfg, tr, va, te)
    b = sweep_alpha([0, 192], [0, 1], cfg, tr, va, te)
    assert len(a.rows) == 4 and a.rows == b.rows
    assert all(0 <= r[2] <= 1 and 0 <= r[3] <= 1 for r in a.rows)
    assert a.to_csv().splitlines()[0] == "alpha,seed,val_accuracy,test_accuracy"
    assert "<svg" in a.to_svg() and len(a.summary()) == 2
    with pytest.raises(ValueError):
        sweep_alpha([], [0], cfg, tr, va, te)


def test_erm_scan_full_grid_point_count():
    tr, va, te = _blob_sets()
    cfg = ErmConfig(model=ModelSpec(arch="mlp", input_shape=(8,), hidden=8, n_classes=4, decoder=False, single_block=True))
    grid = {"lr": (1e-4, 1e-3, 1e-2), "weight_decay": (0.0, 1e-3, 1e-2), "max_epochs": (1, 2, 3)}
    res = erm_scan(grid, [0, 1, 2], cfg, tr, va, te)
    assert len(res.rows) == 81
    assert res.pearson is None or -1 <= res.pearson <= 1


def test_erm_scan_single_config_undefined():
    tr, va, te = _blob_sets()
    cfg = ErmConfig(model=ModelSpec(arch="mlp", input_shape=(8,), hidden=8, n_classes=4))
    res = erm_scan({"lr": (1e-3,), "weight_decay": (0.0,), "max_epochs": (1,)}, [0], cfg, tr, va, te)
    assert res.pearson is None and res.correlation_text() == "undefined"


def test_correlation_helpers():
    assert correlation([1, 2, 3], [2, 4, 7]) > 0.9
    assert correlation([1, 1], [0, 1]) is None
    assert correlation([1, 2, 3], [3, 2, 1], "spearman") == pytest.approx(-1.0)
    r = ScanResult([(0.1, 0.0, 1, 0, 0.5, 0.4)], None)
    assert "undefined" in r.to_svg()


def test_svg_output():
    svg = line_plot([Series("a", [0, 1], [0.2, 0.4], [0.1, 0.1])], "t", "x", "y")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "<svg" in scatter_plot([0.1, 0.2], [0.3, 0.1], "t", "x", "y")


# swaps --------------------------------------------------------------------

SWAP_SPEC = ModelSpec(arch="conv", input_shape=(3, 32, 32), d_zc=8, d_zs=8, conv_widths=(4, 8, 8))


def _imgs(n=6):
    return np.random.default_rng(11).uniform(size=(n, 3, 32, 32)).astype(np.float32)


def test_swap_with_itself_identical_tiles():
    res = counterfactual_swap(init_params(0, SWAP_SPEC), _imgs(), [(2, 2), (3, 3)])
    for t in res.tiles:
        assert t[0].tobytes() == t[1].tobytes() == t[2].tobytes()


def test_self_swap_keeps_reconstruction_digit():
    params = init_params(0, SWAP_SPEC)
    imgs = _imgs()
    probe = LinearProbe(seed=0).fit(embed(params, imgs, "z_c"), np.array([0, 1, 2, 0, 1, 2]))
    res = counterfactual_swap(params, imgs, [(0, 0), (1, 1), (4, 4)], probe)
    assert res.digit_retention == 1.0
    assert 0.0 <= res.source_retention <= 1.0


def test_swap_grid_dimensions():
    res = counterfactual_swap(init_params(0, SWAP_SPEC), _imgs(), [(0, 1), (2, 3), (4, 5)])
    assert res.tiles.shape[:2] == (3, 3)
    assert tile_grid(res.tiles).shape == (3 * 32, 3 * 32, 3)


def test_swap_needs_decoder():
    spec = ModelSpec(arch="conv", input_shape=(3, 32, 32), d_zc=8, d_zs=8, conv_widths=(4, 8, 8), decoder=False)
    with pytest.raises(ValueError, match="decoder"):
        counterfactual_swap(init_params(0, spec), _imgs(), [(0, 1)])


def test_foreground_hue_sign():
    img = np.zeros((3, 4, 4))
    img[0, 1:3, 1:3] = 1.0
    assert foreground_hue(img) == 1.0
    img[[0, 1]] = img[[1, 0]]
    assert foreground_hue(img) == -1.0


def test_cross_env_pairs():
    e = np.array([0, 0, 1, 1, 2])
    p = cross_env_pairs(e, 10, seed=0)
    assert all(e[a] != e[b] and {e[a], e[b]} == {0, 1} for a, b in p)
    assert e[p[0, 0]] == 0 and e[p[1, 0]] == 1


def test_ppm_roundtrip():
    img = np.random.default_rng(12).integers(0, 256, size=(5, 7, 3)) / 255.0
    raw = encode_ppm(img)
    assert raw.startswith(b"P6\n7 5\n255\n")
    np.testing.assert_allclose(decode_ppm(raw), img, atol=1e-12)
    assert encode_ppm(decode_ppm(raw)) == raw
