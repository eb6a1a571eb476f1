"""Layer-level forward functions built from the differentiable primitives."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, DegenerateBatchError, InputError, ShapeError
from . import tensor as T
from .tensor import Tensor, as_tensor


def dense_forward(x, weights, bias) -> Tensor:
    """Affine part ``x @ W + b`` of a dense layer (activation applied separately)."""
    x, weights, bias = as_tensor(x), as_tensor(weights), as_tensor(bias)
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError(f"dense: input {x.shape} incompatible with weights {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"dense: bias {bias.shape} does not match {weights.shape[1]} units")
    return T.matmul(x, weights) + bias


_ACTIVATIONS = {
    "relu": T.relu,
    "sigmoid": T.sigmoid,
    "tanh": T.tanh,
    "softmax": T.softmax,
    "leaky_relu": T.leaky_relu,
    "linear": lambda x: x,
}


def activation_forward(kind: str, x) -> Tensor:
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown activation {kind!r}") from None
    return fn(as_tensor(x))


def conv1d_forward(x, kernels, bias) -> Tensor:
    """Valid (unpadded) 1-D convolution.

    x: (N, T, C_in), kernels: (F, k, C_in), bias: (F,) -> (N, T - k + 1, F)
    """
    x, kernels, bias = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    if x.ndim != 3 or kernels.ndim != 3:
        raise ShapeError("conv1d expects x (N, T, C) and kernels (F, k, C)")
    n, t, c = x.shape
    f, k, kc = kernels.shape
    if kc != c:
        raise ShapeError(f"conv1d: kernel channels {kc} != input channels {c}")
    if t < k:
        raise ShapeError(f"conv1d: sequence length {t} shorter than kernel {k}")
    if bias.shape != (f,):
        raise ShapeError("conv1d: bias must have one entry per filter")
    t_out = t - k + 1
    window = np.arange(t_out)[:, None] + np.arange(k)[None, :]
    patches = T.index(x, (slice(None), window))          # (N, T', k, C)
    patches = T.reshape(patches, (n * t_out, k * c))
    flat_k = T.reshape(kernels, (f, k * c))
    out = T.matmul(patches, T.transpose(flat_k)) + bias
    return T.reshape(out, (n, t_out, f))


def maxpool1d_forward(x, pool: int = 2, keep_remainder: bool = True):
    """Non-overlapping max pooling along time.

    Accepts (T,), (N, T) or (N, T, C). With ``keep_remainder`` a trailing
    window shorter than ``pool`` is pooled over what it has; otherwise it is
    dropped (valid pooling) unless that would leave no output at all.
    Returns ``(pooled, argmax)`` where ``argmax`` holds the source time index
    of every output cell (ties -> lowest index).
    """
    x = as_tensor(x)
    orig_ndim = x.ndim
    if orig_ndim == 1:
        x = T.reshape(x, (1, x.shape[0], 1))
    elif orig_ndim == 2:
        x = T.reshape(x, (x.shape[0], x.shape[1], 1))
    n, t, c = x.shape
    if pool < 1:
        raise ConfigurationError("pool size must be positive")
    t_out = -(-t // pool) if keep_remainder or t < pool else t // pool
    padded = np.full((n, t_out * pool, c), -np.inf)
    padded[:, :min(t, t_out * pool)] = x.data[:, :t_out * pool]
    within = padded.reshape(n, t_out, pool, c).argmax(axis=2)
    src = np.arange(t_out)[None, :, None] * pool + within          # (N, T', C)
    key = (np.arange(n)[:, None, None], src, np.arange(c)[None, None, :])
    out = T.index(x, key)
    if orig_ndim == 1:
        return T.reshape(out, (t_out,)), src.reshape(t_out)
    if orig_ndim == 2:
        return T.reshape(out, (n, t_out)), src.reshape(n, t_out)
    return out, src


def lstm_step(x_t, h_prev, c_prev, weights, biases):
    """One LSTM time step.

    ``weights`` = (W_i, W_f, W_o, W_c), each of shape (H + D, H), applied to the
    concatenation [h_prev, x_t]; ``biases`` = (b_i, b_f, b_o, b_c), each (H,).
    Returns ``(h_t, c_t)``.
    """
    x_t, h_prev, c_prev = as_tensor(x_t), as_tensor(h_prev), as_tensor(c_prev)
    w_i, w_f, w_o, w_c = (as_tensor(w) for w in weights)
    b_i, b_f, b_o, b_c = (as_tensor(b) for b in biases)
    hidden = h_prev.shape[1]
    if c_prev.shape != h_prev.shape or x_t.shape[0] != h_prev.shape[0]:
        raise ShapeError("lstm_step: batch/hidden shapes of x_t, h_prev, c_prev disagree")
    for w in (w_i, w_f, w_o, w_c):
        if w.shape != (hidden + x_t.shape[1], hidden):
            raise ShapeError(f"lstm_step: gate weight {w.shape} != {(hidden + x_t.shape[1], hidden)}")
    z = T.concat([h_prev, x_t], axis=1)
    i_t = T.sigmoid(T.matmul(z, w_i) + b_i)
    f_t = T.sigmoid(T.matmul(z, w_f) + b_f)
    o_t = T.sigmoid(T.matmul(z, w_o) + b_o)
    cand = T.tanh(T.matmul(z, w_c) + b_c)
    c_t = f_t * c_prev + i_t * cand
    h_t = o_t * T.tanh(c_t)
    return h_t, c_t


def _sig(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lstm_sequence(x, weights, biases, return_sequences: bool = False) -> Tensor:
    """Run :func:`lstm_step` over every step of a (N, T, D) input from zero state.

    Same arithmetic as looping :func:`lstm_step`, fused into one graph node
    with a hand-written backward pass. The backward pass is first order only:
    its gradients carry no graph of their own.
    """
    x = as_tensor(x)
    ws = [as_tensor(w) for w in weights]
    bs = [as_tensor(b) for b in biases]
    n, steps, d = x.shape
    h = bs[0].shape[0]
    for w in ws:
        if w.shape != (h + d, h):
            raise ShapeError(f"lstm_sequence: gate weight {w.shape} != {(h + d, h)}")
    w_all = np.concatenate([w.data for w in ws], axis=1)
    b_all = np.concatenate([b.data for b in bs])
    hs = np.zeros((steps + 1, n, h))
    cs = np.zeros((steps + 1, n, h))
    gates = np.zeros((steps, n, 4 * h))
    zs = np.zeros((steps, n, h + d))
    for t in range(steps):
        zs[t, :, :h] = hs[t]
        zs[t, :, h:] = x.data[:, t]
        a = zs[t] @ w_all + b_all
        a[:, :3 * h] = _sig(a[:, :3 * h])
        a[:, 3 * h:] = np.tanh(a[:, 3 * h:])
        gates[t] = a
        i_t, f_t, o_t, g_t = (a[:, k * h:(k + 1) * h] for k in range(4))
        cs[t + 1] = f_t * cs[t] + i_t * g_t
        hs[t + 1] = o_t * np.tanh(cs[t + 1])
    out = np.transpose(hs[1:], (1, 0, 2)).copy() if return_sequences else hs[steps].copy()

    def backward(g):
        g = g.data
        dx = np.zeros((n, steps, d))
        dw = np.zeros_like(w_all)
        db = np.zeros_like(b_all)
        dh_next = np.zeros((n, h))
        dc_next = np.zeros((n, h))
        for t in reversed(range(steps)):
            dh = dh_next + (g[:, t] if return_sequences else (g if t == steps - 1 else 0.0))
            a = gates[t]
            i_t, f_t, o_t, g_t = (a[:, k * h:(k + 1) * h] for k in range(4))
            tc = np.tanh(cs[t + 1])
            dc = dc_next + dh * o_t * (1.0 - tc * tc)
            da = np.concatenate([dc * g_t * i_t * (1.0 - i_t), dc * cs[t] * f_t * (1.0 - f_t),
                                 dh * tc * o_t * (1.0 - o_t), dc * i_t * (1.0 - g_t * g_t)], axis=1)
            dw += zs[t].T @ da
            db += da.sum(axis=0)
            dz = da @ w_all.T
            dh_next, dc_next = dz[:, :h], dc * f_t
            dx[:, t] = dz[:, h:]
        return ((Tensor(dx),) + tuple(Tensor(dw[:, k * h:(k + 1) * h]) for k in range(4))
                + tuple(Tensor(db[k * h:(k + 1) * h]) for k in range(4)))

    return T._make(out, (x, *ws, *bs), backward, "lstm_sequence")


def batch_norm_forward(x, scale, shift, eps: float = 1e-5, training: bool = True,
                       running_mean=None, running_var=None, momentum: float = 0.1):
    """Per-feature batch normalization of a (N, F) input.

    In training mode the batch statistics are used and ``running_mean`` /
    ``running_var`` (numpy arrays, if given) are updated in place; in
    inference mode the running statistics are used.
    """
    x, scale, shift = as_tensor(x), as_tensor(scale), as_tensor(shift)
    if x.ndim != 2:
        raise ShapeError("batch_norm expects a (N, F) input")
    if training:
        n = x.shape[0]
        if n < 2:
            raise DegenerateBatchError("batch normalization needs at least 2 rows in training mode")
        mu = T.mean(x, axis=0, keepdims=True)
        centered = x - mu
        var = T.mean(centered * centered, axis=0, keepdims=True)
        xhat = centered / T.sqrt(var + eps)
        if running_mean is not None:
            running_mean *= 1 - momentum
            running_mean += momentum * mu.data.ravel()
        if running_var is not None:
            running_var *= 1 - momentum
            running_var += momentum * var.data.ravel() * n / (n - 1)
    else:
        if running_mean is None or running_var is None:
            raise InputError("inference-mode batch norm needs running statistics")
        xhat = (x - Tensor(running_mean)) / Tensor(np.sqrt(running_var + eps))
    return xhat * scale + shift


def softmax_cross_entropy(logits, targets) -> Tensor:
    """Mean over the batch of -log softmax(logits)[target].

    ``targets`` is one-hot with the same shape as ``logits``. The gradient with
    respect to the logits, available through ``backward``, is
    ``(softmax(logits) - targets) / N``.
    """
    logits = as_tensor(logits)
    y = np.asarray(targets.data if isinstance(targets, Tensor) else targets, dtype=np.float64)
    if y.shape != logits.shape or logits.ndim != 2:
        raise ShapeError(f"targets {y.shape} do not match logits {logits.shape}")
    onehot = np.isin(y, (0.0, 1.0)).all(axis=1) & (y.sum(axis=1) == 1.0)
    if not onehot.all():
        raise InputError(f"target row {int(np.argmin(onehot))} is not one-hot")
    logp = T.log_softmax(logits, axis=1)
    return -T.mean(T.sum_(logp * Tensor(y), axis=1))
