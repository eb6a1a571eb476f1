import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from idsbalance.errors import (ConfigurationError, DegenerateBatchError, InputError, ShapeError,
                               StateError)
from idsbalance.ndiff import (Adam, AdamState, LayerSpec, Network, Tensor, activation_forward,
                              adam_step, batch_norm_forward, conv1d_forward, dense_forward, grad,
                              lstm_sequence, lstm_step, maxpool1d_forward, softmax,
                              softmax_cross_entropy)
from idsbalance.ndiff import tensor as T
from idsbalance.ndiff import checkpoint

from oracles import central_diff, conv1d_loop, lstm_step_scalar, maxpool_loop, rel_error

SEEDS = range(20)


def check_grad(build, shapes, seed, tol=1e-4, positive=False):
    """Compare backward() against central differences for ``sum(build(*xs) * R)``."""
    rng = np.random.default_rng(seed)
    arrs = [rng.uniform(0.2, 1.5, s) if positive else rng.normal(size=s) for s in shapes]
    out_shape = build(*[Tensor(a) for a in arrs]).shape
    proj = rng.normal(size=out_shape)

    def f():
        return float(np.sum(build(*[Tensor(a) for a in arrs]).data * proj))

    params = [Tensor(a.copy(), requires_grad=True) for a in arrs]
    (build(*params) * Tensor(proj)).sum().backward()
    numeric = central_diff(f, arrs)
    for p, n in zip(params, numeric):
        assert rel_error(p.grad, n) < tol


# -- forward examples -------------------------------------------------------

def test_dense_examples():
    assert dense_forward([[1.0, 2.0]], [[1.0], [1.0]], [0.0]).data.tolist() == [[3.0]]
    x = np.random.default_rng(0).normal(size=(4, 3))
    np.testing.assert_array_equal(dense_forward(x, np.eye(3), np.zeros(3)).data, x)
    out = dense_forward([[1.0, 0.0], [0.0, 1.0]], [[2.0, 0.0], [0.0, 3.0]], [1.0, 1.0]).data
    X, W, b = np.eye(2), np.array([[2.0, 0.0], [0.0, 3.0]]), np.ones(2)
    loop = [[sum(X[i, k] * W[k, j] for k in range(2)) + b[j] for j in range(2)] for i in range(2)]
    assert out.tolist() == loop == [[3.0, 1.0], [1.0, 4.0]]


def test_dense_shape_error():
    with pytest.raises(ShapeError):
        dense_forward(np.ones((2, 3)), np.ones((2, 2)), np.zeros(2))


def test_activation_examples():
    assert activation_forward("relu", [-1.0, 2.0]).data.tolist() == [0.0, 2.0]
    assert activation_forward("softmax", [[0.0, 0.0]]).data.tolist() == [[0.5, 0.5]]
    assert activation_forward("sigmoid", 0.0).item() == 0.5
    with pytest.raises(ConfigurationError):
        activation_forward("swish", [1.0])


def test_sigmoid_extremes_finite():
    out = activation_forward("sigmoid", [-1000.0, 1000.0]).data
    assert out.tolist() == [0.0, 1.0]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5), elements=st.floats(-15, 15)))  # wider gaps round p_max to 1.0
def test_softmax_rows_sum_to_one(x):
    p = softmax(x, axis=1).data
    assert np.all(p > 0) and np.all(p < 1)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_conv1d_examples():
    x = np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1)
    assert conv1d_forward(x, np.ones((1, 1, 1)), [0.0]).data.ravel().tolist() == [1.0, 2.0, 3.0]
    x = np.ones((1, 4, 1))
    assert conv1d_forward(x, np.ones((1, 3, 1)), [0.0]).data.ravel().tolist() == [3.0, 3.0]
    with pytest.raises(ShapeError):
        conv1d_forward(np.ones((1, 2, 1)), np.ones((1, 3, 1)), [0.0])


@pytest.mark.parametrize("seed", SEEDS)
def test_conv1d_matches_loop(seed):
    rng = np.random.default_rng(seed)
    x, k, b = rng.normal(size=(2, 8, 2)), rng.normal(size=(3, 3, 2)), rng.normal(size=3)
    np.testing.assert_allclose(conv1d_forward(x, k, b).data, conv1d_loop(x, k, b), atol=1e-12, rtol=0)


def test_maxpool_examples():
    out, src = maxpool1d_forward(np.array([1.0, 3.0, 2.0, 5.0]))
    assert out.data.tolist() == [3.0, 5.0] and src.tolist() == [1, 3]
    assert maxpool1d_forward(np.array([7.0]))[0].data.tolist() == [7.0]
    out, src = maxpool1d_forward(np.array([2.0, 2.0, 2.0, 2.0]))
    assert out.data.tolist() == [2.0, 2.0] and src.tolist() == [0, 2]


def test_maxpool_routes_gradient_to_first_tie():
    x = Tensor(np.array([2.0, 2.0, 1.0, 4.0, 9.0]), requires_grad=True)
    out, _ = maxpool1d_forward(x)
    out.sum().backward()
    assert x.grad.tolist() == [1.0, 0.0, 0.0, 1.0, 1.0]


@pytest.mark.parametrize("seed", SEEDS)
def test_maxpool_matches_loop(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(3, 9, 4))
    np.testing.assert_allclose(maxpool1d_forward(x, 2)[0].data, maxpool_loop(x, 2), atol=1e-12, rtol=0)


def _lstm_params(rng, d, h, scale=0.5):
    ws = tuple(rng.normal(scale=scale, size=(h + d, h)) for _ in range(4))
    bs = tuple(rng.normal(scale=scale, size=h) for _ in range(4))
    return ws, bs


def test_lstm_zero_weights():
    d, h = 3, 4
    ws = tuple(np.zeros((h + d, h)) for _ in range(4))
    bs = tuple(np.zeros(h) for _ in range(4))
    c_prev = np.arange(8.0).reshape(2, 4)
    h_t, c_t = lstm_step(np.ones((2, d)), np.ones((2, h)), c_prev, ws, bs)
    np.testing.assert_allclose(c_t.data, 0.5 * c_prev, atol=1e-15)
    np.testing.assert_allclose(h_t.data, 0.5 * np.tanh(0.5 * c_prev), atol=1e-15)


def test_lstm_memory_carry():
    d, h = 2, 3
    zeros = np.zeros((h + d, h))
    big = 1e3
    bs = (np.full(h, -big), np.full(h, big), np.zeros(h), np.zeros(h))
    c_prev = np.array([[0.3, -1.2, 2.0]])
    _, c_t = lstm_step(np.ones((1, d)), np.zeros((1, h)), c_prev, (zeros,) * 4, bs)
    np.testing.assert_allclose(c_t.data, c_prev, atol=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_lstm_matches_scalar_oracle(seed):
    rng = np.random.default_rng(seed)
    d, h, n = 3, 4, 2
    ws, bs = _lstm_params(rng, d, h)
    x, hp, cp = rng.normal(size=(n, d)), rng.normal(size=(n, h)), rng.normal(size=(n, h))
    h_t, c_t = lstm_step(x, hp, cp, ws, bs)
    h_o, c_o = lstm_step_scalar(x.tolist(), hp.tolist(), cp.tolist(),
                                [w.tolist() for w in ws], [b.tolist() for b in bs])
    np.testing.assert_allclose(h_t.data, h_o, atol=1e-12, rtol=0)
    np.testing.assert_allclose(c_t.data, c_o, atol=1e-12, rtol=0)


def test_batch_norm_examples():
    out = batch_norm_forward(np.full((4, 2), 3.0), np.ones(2), np.array([0.5, -1.0]))
    np.testing.assert_allclose(out.data, np.tile([0.5, -1.0], (4, 1)))
    out = batch_norm_forward(np.array([[0.0], [2.0]]), np.ones(1), np.zeros(1), eps=1e-12)
    np.testing.assert_allclose(out.data.ravel(), [-1.0, 1.0], atol=1e-9)
    with pytest.raises(DegenerateBatchError):
        batch_norm_forward(np.ones((1, 3)), np.ones(3), np.zeros(3))


def test_batch_norm_moments():
    rng = np.random.default_rng(1)
    x = rng.normal(3.0, 5.0, size=(500, 3))
    scale, shift = np.array([2.0, 0.5, 1.0]), np.array([1.0, -2.0, 0.0])
    out = batch_norm_forward(x, scale, shift).data
    np.testing.assert_allclose(out.mean(axis=0), shift, atol=1e-9)
    np.testing.assert_allclose(out.std(axis=0), scale, rtol=1e-4)


def test_batch_norm_inference_uses_running_stats():
    rm, rv = np.zeros(2), np.ones(2)
    x = np.array([[1.0, 2.0], [3.0, 6.0]])
    batch_norm_forward(x, np.ones(2), np.zeros(2), running_mean=rm, running_var=rv, momentum=1.0)
    np.testing.assert_allclose(rm, [2.0, 4.0])
    np.testing.assert_allclose(rv, [2.0, 8.0])
    out = batch_norm_forward([[2.0, 4.0]], np.ones(2), np.zeros(2), training=False,
                             running_mean=rm, running_var=rv)
    np.testing.assert_allclose(out.data, 0.0, atol=1e-12)


def test_cross_entropy_examples():
    loss = softmax_cross_entropy(np.zeros((3, 5)), np.eye(5)[[0, 2, 4]])
    assert loss.item() == pytest.approx(math.log(5), abs=1e-12)
    for margin in (5.0, 20.0, 60.0):
        assert softmax_cross_entropy([[margin, 0.0]], [[1.0, 0.0]]).item() < math.exp(-margin) * 1.01
    loss = softmax_cross_entropy([[1.0, 0.0]], [[1.0, 0.0]])
    assert loss.item() == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-14)
    with pytest.raises(InputError):
        softmax_cross_entropy([[1.0, 0.0]], [[0.5, 0.5]])


def test_cross_entropy_gradient_closed_form():
    rng = np.random.default_rng(3)
    logits = Tensor(rng.normal(size=(6, 5)), requires_grad=True)
    y = np.eye(5)[rng.integers(0, 5, 6)]
    softmax_cross_entropy(logits, y).backward()
    p = np.exp(logits.data) / np.exp(logits.data).sum(axis=1, keepdims=True)
    np.testing.assert_allclose(logits.grad, (p - y) / 6, atol=1e-14)


# -- gradients ----------------------------------------------------------------

UNARY = {
    "relu": T.relu, "sigmoid": T.sigmoid, "tanh": T.tanh, "exp": T.exp,
    "neg": T.neg, "leaky_relu": T.leaky_relu,
    "softmax": lambda x: T.softmax(x, axis=1), "log_softmax": lambda x: T.log_softmax(x, axis=1),
    "transpose": T.transpose, "sum0": lambda x: T.sum_(x, 0), "mean1": lambda x: T.mean(x, 1),
    "reshape": lambda x: T.reshape(x, (-1,)), "square": lambda x: x ** 2,
    "index": lambda x: x[1:, ::2], "fancy": lambda x: x[[0, 0, 2], [1, 3, 1]],
}


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_grad(name, seed):
    check_grad(UNARY[name], [(3, 4)], seed)


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("name", ["log", "sqrt", "pow"])
def test_positive_domain_grad(name, seed):
    fn = {"log": T.log, "sqrt": T.sqrt, "pow": lambda x: x ** -1.5}[name]
    check_grad(fn, [(3, 4)], seed, positive=True)


BINARY = {
    "add_broadcast": (lambda a, b: a + b, [(3, 4), (4,)]),
    "sub_broadcast": (lambda a, b: a - b, [(3, 4), (3, 1)]),
    "mul_broadcast": (lambda a, b: a * b, [(3, 4), (1, 4)]),
    "matmul": (T.matmul, [(3, 4), (4, 2)]),
    "concat": (lambda a, b: T.concat([a, b], axis=1), [(3, 2), (3, 4)]),
    "stack": (lambda a, b: T.stack([a, b], axis=1), [(3, 4), (3, 4)]),
}


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("name", sorted(BINARY))
def test_binary_grad(name, seed):
    fn, shapes = BINARY[name]
    check_grad(fn, shapes, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_div_grad(seed):
    check_grad(lambda a, b: a / b, [(3, 4), (3, 4)], seed, positive=True)


@pytest.mark.parametrize("seed", SEEDS)
def test_layer_grads(seed):
    check_grad(dense_forward, [(4, 3), (3, 2), (2,)], seed)
    check_grad(conv1d_forward, [(2, 7, 2), (3, 3, 2), (3,)], seed)
    check_grad(lambda x: maxpool1d_forward(x, 2)[0], [(2, 7, 3)], seed)
    check_grad(lambda x, s, b: batch_norm_forward(x, s, b), [(5, 3), (3,), (3,)], seed)
    check_grad(lambda z: softmax_cross_entropy(z, np.eye(4)[[0, 3, 1]]), [(3, 4)], seed)

    def step(x, h, c, *wb):
        h_t, c_t = lstm_step(x, h, c, wb[:4], wb[4:])
        return T.concat([h_t, c_t], axis=1)

    check_grad(step, [(2, 3), (2, 4), (2, 4)] + [(7, 4)] * 4 + [(4,)] * 4, seed)


NETWORKS = {
    "fnn": ([LayerSpec("dense", units=5), LayerSpec("relu"), LayerSpec("dense", units=3)], (4,)),
    "bn": ([LayerSpec("dense", units=5), LayerSpec("batch_norm"), LayerSpec("relu"),
            LayerSpec("dense", units=3), LayerSpec("tanh")], (4,)),
    "cnn": ([LayerSpec("conv1d", filters=3, kernel=3), LayerSpec("relu"),
             LayerSpec("maxpool1d", pool=2), LayerSpec("flatten"), LayerSpec("dense", units=3)], (9, 1)),
    "lstm": ([LayerSpec("lstm", units=4, return_sequences=True), LayerSpec("lstm", units=3),
              LayerSpec("dense", units=2)], (5, 1)),
}


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("name", sorted(NETWORKS))
def test_network_param_grads(name, seed):
    specs, in_shape = NETWORKS[name]
    net = Network(specs, in_shape, seed=seed)
    rng = np.random.default_rng(100 + seed)
    x = rng.normal(size=(4,) + in_shape)
    y = np.eye(net.output_shape[0])[rng.integers(0, net.output_shape[0], 4)]
    arrays_ = [p.data for p in net.parameters()]

    def f():
        return softmax_cross_entropy(net(x, training=True), y).item()

    softmax_cross_entropy(net(x, training=True), y).backward()
    analytic = [p.grad.copy() for p in net.parameters()]
    numeric = central_diff(f, arrays_)
    for a, n in zip(analytic, numeric):
        assert rel_error(a, n) < 1e-4


@pytest.mark.parametrize("seed", SEEDS)
def test_second_order_gradient_penalty(seed):
    """Penalty on the input-gradient norm, differentiated w.r.t. the weights."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(4, 3))
    w1, b1, w2 = rng.normal(size=(3, 5)), rng.normal(size=5), rng.normal(size=(5, 1))

    def penalty(W1, B1, W2, create_graph):
        xi = Tensor(x, requires_grad=True)
        out = T.matmul(T.leaky_relu(T.matmul(xi, W1) + B1), W2)
        (g,) = grad(out.sum(), [xi], create_graph=create_graph)
        norms = T.sqrt(T.sum_(g * g, axis=1) + 1e-12)
        return T.mean((norms - 1.0) ** 2)

    params = [Tensor(a.copy(), requires_grad=True) for a in (w1, b1, w2)]
    penalty(*params, create_graph=True).backward()
    numeric = central_diff(lambda: penalty(Tensor(w1), Tensor(b1), Tensor(w2), False).item(),
                           [w1, b1, w2])
    for p, n in zip(params, numeric):
        # the bias only reaches the input gradient through the piecewise-constant mask
        g = np.zeros_like(p.data) if p.grad is None else p.grad
        assert rel_error(g, n) < 1e-4


def test_backward_without_graph_is_state_error():
    with pytest.raises(StateError):
        Tensor([1.0, 2.0]).sum().backward()


def test_linear_case_and_unused_parameter():
    x = np.array([1.0, -2.0, 3.0])
    W = Tensor(np.ones((2, 3)), requires_grad=True)
    unused = Tensor(np.ones(4), requires_grad=True)
    loss = T.matmul(W, Tensor(x.reshape(3, 1))).sum() + 0.0 * unused.sum()
    loss.backward()
    np.testing.assert_array_equal(W.grad, np.tile(x, (2, 1)))
    assert np.all(unused.grad == 0.0)


def test_grad_unreachable_returns_none():
    a = Tensor(np.ones(2), requires_grad=True)
    b = Tensor(np.ones(2), requires_grad=True)
    ga, gb = grad((a * 2.0).sum(), [a, b])
    assert ga.data.tolist() == [2.0, 2.0] and gb is None


# -- networks ---------------------------------------------------------------

def test_forward_deterministic():
    specs, shape = NETWORKS["lstm"]
    net = Network(specs, shape, seed=4)
    x = np.random.default_rng(0).normal(size=(3,) + shape)
    assert np.array_equal(net(x).data, net(x).data)
    assert np.array_equal(Network(specs, shape, seed=4)(x).data, net(x).data)


def test_cnn_flatten_width():
    net = Network([LayerSpec("conv1d", filters=32, kernel=3), LayerSpec("relu"),
                   LayerSpec("maxpool1d", pool=2), LayerSpec("flatten"),
                   LayerSpec("dense", units=100)], (41, 1))
    assert net.layers[3].out_shape == (19 * 32,)


def test_fnn_parameter_count():
    specs = [LayerSpec("dense", units=50), LayerSpec("relu"), LayerSpec("dense", units=30),
             LayerSpec("relu"), LayerSpec("dense", units=20), LayerSpec("relu"),
             LayerSpec("dense", units=5)]
    assert Network(specs, (41,)).count_parameters() == 41 * 50 + 50 + 50 * 30 + 30 + 30 * 20 + 20 + 20 * 5 + 5


def test_incompatible_layers_rejected():
    with pytest.raises(ConfigurationError):
        Network([LayerSpec("conv1d", filters=2, kernel=3)], (5,))
    with pytest.raises(ConfigurationError):
        LayerSpec("dense", units=0)
    with pytest.raises(ConfigurationError):
        LayerSpec("dropout")


def test_checkpoint_roundtrip():
    specs, shape = NETWORKS["bn"]
    net = Network(specs, shape, seed=9)
    x = np.random.default_rng(0).normal(size=(6,) + shape)
    net(x, training=True)
    buf = net.to_bytes({"note": "x"})
    clone, extra = Network.from_bytes(buf)
    assert extra == {"note": "x"}
    np.testing.assert_array_equal(clone(x).data, net(x).data)
    tensors, header = checkpoint.loads(buf)
    assert header["input_shape"] == [4]
    raw = io.BytesIO()
    checkpoint.save(raw, {"a": np.arange(3.0)})
    assert raw.getvalue()[-24:] == np.arange(3.0).astype("<f8").tobytes()


# -- Adam ---------------------------------------------------------------------

def test_adam_zero_gradient_keeps_params():
    p = np.array([1.0, -2.0])
    state = AdamState.for_params([p])
    for _ in range(5):
        p = adam_step(state, [p], [np.zeros(2)])[0]
    assert p.tolist() == [1.0, -2.0]


def test_adam_first_step_magnitude():
    for g in (1e-3, 0.7, -25.0):
        p = np.array([0.0])
        state = AdamState.for_params([p], lr=0.01)
        new = adam_step(state, [p], [np.array([g])])[0]
        # bias correction makes the first update lr * g / (|g| + eps)
        assert new[0] == pytest.approx(-0.01 * g / (abs(g) + 1e-8), rel=1e-12)


def test_adam_constant_gradient_fixed_point():
    p = np.array([0.0, 0.0])
    state = AdamState.for_params([p], lr=1e-3)
    for _ in range(1000):
        prev = p
        p = adam_step(state, [p], [np.array([3.0, -0.2])])[0]
    np.testing.assert_allclose(p - prev, [-1e-3, 1e-3], rtol=1e-6)


def test_adam_shape_mismatch_and_step_count():
    p = Tensor(np.zeros(3), requires_grad=True)
    opt = Adam([p])
    p.grad = np.ones(3)
    opt.step()
    opt.step()
    assert opt.state.step == 2
    with pytest.raises(ShapeError):
        adam_step(opt.state, [p], [np.ones(4)])


@pytest.mark.parametrize("return_sequences", [False, True])
@pytest.mark.parametrize("seed", range(3))
def test_fused_lstm_matches_step_loop(seed, return_sequences):
    rng = np.random.default_rng(seed)
    n, steps, d, h = 3, 4, 2, 5
    ws, bs = _lstm_params(rng, d, h)
    x = rng.normal(size=(n, steps, d))
    upstream = rng.normal(size=(n, steps, h) if return_sequences else (n, h))

    def loop(xt, wt, bt):
        hh, cc, outs = Tensor(np.zeros((n, h))), Tensor(np.zeros((n, h))), []
        for t in range(steps):
            hh, cc = lstm_step(T.index(xt, (slice(None), t)), hh, cc, wt, bt)
            outs.append(hh)
        return T.stack(outs, axis=1) if return_sequences else hh

    results = []
    for fn in (loop, lambda xt, wt, bt: lstm_sequence(xt, wt, bt, return_sequences)):
        xt = Tensor(x.copy(), requires_grad=True)
        wt = [Tensor(w.copy(), requires_grad=True) for w in ws]
        bt = [Tensor(b.copy(), requires_grad=True) for b in bs]
        out = fn(xt, wt, bt)
        (out * Tensor(upstream)).sum().backward()
        results.append([out.data, xt.grad] + [p.grad for p in wt + bt])
    for a, b in zip(*results):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
