import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scbd import ndcore as nd
from scbd.ndcore import Array, NonFiniteError, ShapeError, Tape, _fallback, grad_check, kernels

F64 = np.float64


def rand(rng, *shape):
    return rng.uniform(-2, 2, size=shape)


# forward examples ---------------------------------------------------------

def test_log_softmax_uniform_row():
    out = nd.log_softmax(Array([[0.0, 0.0, 0.0]])).numpy()
    np.testing.assert_allclose(out, np.full((1, 3), -math.log(3)), atol=1e-7)


def test_l2_normalize_345():
    np.testing.assert_allclose(nd.l2_normalize(Array([[3.0, 4.0]])).numpy(), [[0.6, 0.8]], atol=1e-7)


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 2))
    naive = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(3):
                naive[i, j] += a[i, k] * b[k, j]
    got = nd.matmul(Array(a), Array(b)).numpy()
    np.testing.assert_allclose(got, naive, atol=1e-6)


def test_shape_mismatch_names_op_and_shapes():
    with pytest.raises(ShapeError, match=r"matmul.*\(2, 3\).*\(2, 3\)"):
        nd.matmul(Array(np.ones((2, 3))), Array(np.ones((2, 3))))
    with pytest.raises(ShapeError, match=r"add"):
        nd.add(Array(np.ones((2, 3))), Array(np.ones((4,))))


def test_non_finite_output_raises():
    with pytest.raises(NonFiniteError):
        nd.log(Array([0.0, 1.0]))
    with pytest.raises(NonFiniteError):
        Array([np.nan])


def test_zero_extent_rejected():
    with pytest.raises(ShapeError):
        Array(np.zeros((0, 3)))


def test_conv_output_shapes():
    x = Array(np.ones((2, 3, 8, 8)))
    y = nd.conv2d(x, Array(np.ones((5, 3, 3, 3))), stride=2, padding=1)
    assert y.shape == (2, 5, 4, 4)
    z = nd.conv_transpose2d(y, Array(np.ones((5, 3, 4, 4))), stride=2, padding=1)
    assert z.shape == (2, 3, 8, 8)


def test_conv2d_matches_direct_loop():
    rng = np.random.default_rng(1)
    x, w, b = rng.normal(size=(1, 2, 5, 5)), rng.normal(size=(3, 2, 3, 3)), rng.normal(size=3)
    got = nd.conv2d(Array(x, dtype=F64), Array(w, dtype=F64), Array(b, dtype=F64), stride=2, padding=1).numpy()
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    want = np.zeros((1, 3, 3, 3))
    for o in range(3):
        for i in range(3):
            for j in range(3):
                want[0, o, i, j] = (xp[0, :, 2 * i:2 * i + 3, 2 * j:2 * j + 3] * w[o]).sum() + b[o]
    np.testing.assert_allclose(got, want, atol=1e-10)


# backward examples --------------------------------------------------------

def test_sum_gradient_is_ones():
    w = Array(np.arange(4.0), requires_grad=True)
    (g,) = nd.backward(nd.sum(w), [w])
    np.testing.assert_array_equal(g, np.ones(4))


def test_l2_normalize_dot_matches_finite_differences():
    rng = np.random.default_rng(2)
    c = rng.normal(size=(1, 5))
    rep = grad_check(lambda p: nd.sum(nd.l2_normalize(p["w"]) * Array(c, dtype=F64)), {"w": rng.normal(size=(1, 5))})
    assert rep.passed and rep.worst() <= 1e-4


def test_stop_gradient_blocks_upstream():
    w = Array(np.ones(3), requires_grad=True)
    loss = nd.sum(nd.stop_gradient(w * 2.0) * 3.0)
    (g,) = nd.backward(loss, [w])
    np.testing.assert_array_equal(g, np.zeros(3))


def test_unreachable_param_gets_zero():
    w, u = Array(np.ones(2), requires_grad=True), Array(np.ones(3), requires_grad=True)
    gw, gu = nd.backward(nd.sum(w), [w, u])
    np.testing.assert_array_equal(gu, np.zeros(3))


def test_non_scalar_loss_rejected():
    with pytest.raises(ShapeError):
        nd.backward(Array(np.ones(3), requires_grad=True) * 2.0)


def test_stop_gradient_value_and_cut_graph():
    w0 = np.array([0.5, -1.5, 2.0])
    w = Array(w0, requires_grad=True, dtype=F64)
    s = nd.stop_gradient(w)
    np.testing.assert_array_equal(s.numpy(), w.numpy())
    (g,) = nd.backward(nd.sum(s * w), [w])
    np.testing.assert_allclose(g, w0)  # not 2w


# grad_check examples ------------------------------------------------------

def test_grad_check_quadratic():
    rep = grad_check(lambda p: nd.sum(p["w"] * p["w"]), {"w": np.random.default_rng(3).normal(size=7)})
    assert rep.worst() <= 1e-6


def test_grad_check_constant():
    rep = grad_check(lambda p: nd.sum(p["w"] * 0.0) + 1.0, {"w": np.ones(4)})
    assert rep.passed and rep.worst() == 0.0


def test_grad_check_reports_wrong_gradient():
    # detached branch makes the analytic gradient disagree with the numeric one
    rep = grad_check(lambda p: nd.sum(nd.stop_gradient(p["w"]) * p["w"]), {"w": np.array([1.0, 2.0])})
    assert not rep.passed


def test_grad_check_subsamples_large_params():
    rep = grad_check(lambda p: nd.sum(p["w"] * p["w"]), {"w": np.ones(1000)}, max_coords=16)
    assert rep.passed


# every op against finite differences ---------------------------------------

def _op_cases(rng):
    x = rand(rng, 3, 4)
    y = rand(rng, 3, 4)
    pos = rng.uniform(0.5, 2, size=(3, 4))
    img = rand(rng, 2, 2, 6, 6)
    return {
        "add": (lambda p: nd.sum(nd.add(p["a"], p["b"]) * p["a"]), {"a": x, "b": y[0]}),
        "sub": (lambda p: nd.sum(nd.sub(p["a"], p["b"]) * p["a"]), {"a": x, "b": y}),
        "mul": (lambda p: nd.sum(nd.mul(p["a"], p["b"])), {"a": x, "b": y}),
        "div": (lambda p: nd.sum(nd.div(p["a"], p["b"])), {"a": x, "b": pos}),
        "exp": (lambda p: nd.sum(nd.exp(p["a"])), {"a": x}),
        "log": (lambda p: nd.sum(nd.log(p["a"])), {"a": pos}),
        "abs": (lambda p: nd.sum(nd.abs(p["a"]) * p["a"]), {"a": x}),
        "gelu": (lambda p: nd.sum(nd.gelu(p["a"]) * p["a"]), {"a": x}),
        "mean": (lambda p: nd.sum(nd.mean(p["a"], axis=1) * nd.mean(p["a"], axis=0).sum()), {"a": x}),
        "matmul": (lambda p: nd.sum(nd.gelu(nd.matmul(p["a"], p["b"]))), {"a": x, "b": rand(rng, 4, 2)}),
        "log_softmax": (lambda p: nd.sum(nd.log_softmax(p["a"]) * Array(y, dtype=F64)), {"a": x}),
        "l2_normalize": (lambda p: nd.sum(nd.l2_normalize(p["a"]) * Array(y, dtype=F64)), {"a": x}),
        "reshape_transpose": (lambda p: nd.sum(nd.transpose(nd.reshape(p["a"], (4, 3))) * Array(y, dtype=F64)), {"a": x}),
        "conv2d": (lambda p: nd.sum(nd.gelu(nd.conv2d(p["x"], p["w"], p["b"], stride=2, padding=1))),
                   {"x": img, "w": rand(rng, 3, 2, 3, 3), "b": rand(rng, 3)}),
        "conv_transpose2d": (lambda p: nd.sum(nd.gelu(nd.conv_transpose2d(p["x"], p["w"], p["b"], stride=2, padding=1))),
                             {"x": img, "w": rand(rng, 2, 3, 4, 4), "b": rand(rng, 3)}),
    }


@pytest.mark.parametrize("name", list(_op_cases(np.random.default_rng(0))))
def test_op_gradients(name):
    f, params = _op_cases(np.random.default_rng(4))[name]
    rep = grad_check(f, params)
    assert rep.worst() <= 1e-4, rep.max_rel_error


# properties ---------------------------------------------------------------

rows = arrays(F64, st.tuples(st.integers(1, 5), st.integers(2, 8)), elements=st.floats(-2, 2))


@settings(max_examples=60, deadline=None)
@given(rows, st.floats(-50, 50))
def test_log_softmax_normalized_and_shift_invariant(x, c):
    a = nd.log_softmax(Array(x)).numpy()
    np.testing.assert_allclose(np.exp(a.astype(F64)).sum(axis=1), 1.0, atol=1e-6)
    b = nd.log_softmax(Array(x + c)).numpy()
    assert np.abs(a - b).max() <= 1e-5 * max(1.0, np.abs(a).max())


@settings(max_examples=60, deadline=None)
@given(rows)
def test_l2_normalize_unit_rows(x):
    norms = np.linalg.norm(x, axis=1)
    out = nd.l2_normalize(Array(x)).numpy().astype(F64)
    ok = norms >= 1e-3
    np.testing.assert_allclose(np.linalg.norm(out[ok], axis=1), 1.0, atol=1e-6)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(_op_cases(np.random.default_rng(0)))))
def test_random_inputs_pass_grad_check(seed, name):
    f, params = _op_cases(np.random.default_rng(seed))[name]
    assert grad_check(f, params, seed=seed).worst() <= 1e-4


def test_backward_is_bit_deterministic():
    rng = np.random.default_rng(5)
    w = Array(rng.normal(size=(2, 3, 3, 3)), requires_grad=True)
    x = Array(rng.normal(size=(4, 3, 8, 8)))
    loss = nd.mean(nd.gelu(nd.conv2d(x, w, stride=2, padding=1)))
    tape = Tape.of(loss)
    g1 = tape.backward(loss)[id(w)].copy()
    g2 = tape.backward(loss)[id(w)].copy()
    assert g1.tobytes() == g2.tobytes()


# compiled kernels vs fallback ---------------------------------------------

@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
@pytest.mark.parametrize("geom", [(3, 1, 1), (3, 2, 1), (4, 2, 1), (1, 1, 0)])
def test_compiled_kernels_match_fallback(dtype, geom):
    from scbd.ndcore import _kernels

    k, stride, pad = geom
    rng = np.random.default_rng(6)
    x = rng.normal(size=(2, 3, 8, 8)).astype(dtype)
    cols_c = _kernels.im2col(x, k, k, stride, pad)
    cols_p = _fallback.im2col(x, k, k, stride, pad)
    np.testing.assert_array_equal(cols_c, cols_p)
    back_c = _kernels.col2im(cols_c, 2, 3, 8, 8, k, k, stride, pad)
    back_p = _fallback.col2im(cols_p, 2, 3, 8, 8, k, k, stride, pad)
    np.testing.assert_allclose(back_c, back_p, rtol=1e-6, atol=1e-6)
    flat = x.reshape(-1)
    np.testing.assert_allclose(_kernels.gelu_forward(flat), _fallback.gelu_forward(flat), rtol=1e-6, atol=1e-7)
    g = rng.normal(size=flat.shape).astype(dtype)
    np.testing.assert_allclose(_kernels.gelu_backward(flat, g), _fallback.gelu_backward(flat, g), rtol=1e-6, atol=1e-7)


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")
