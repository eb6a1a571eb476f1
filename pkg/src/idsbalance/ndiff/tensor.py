"""Reverse-mode automatic differentiation over numpy arrays.

Every op records a backward closure that is itself written with Tensor ops,
so gradients can be differentiated again (``grad(..., create_graph=True)``),
which the gradient penalty of the GAN critic relies on.
"""
from __future__ import annotations

import contextlib
from typing import Optional, Sequence

import numpy as np

from ..errors import ShapeError, StateError

_grad_enabled = True


@contextlib.contextmanager
def set_grad_enabled(mode: bool):
    global _grad_enabled
    prev, _grad_enabled = _grad_enabled, bool(mode)
    try:
        yield
    finally:
        _grad_enabled = prev


def no_grad():
    return set_grad_enabled(False)


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "__weakref__")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, op: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None
        self.op = op

    # -- plumbing ---------------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf."""
        if not self.requires_grad:
            raise StateError("backward() needs a tensor produced by a recorded forward pass")
        if grad is None:
            if self.size != 1:
                raise ShapeError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        leaves = [t for t in _topo(self) if not t._parents]
        grads = _run_backward(self, Tensor(grad), leaves, create_graph=False)
        for leaf, g in zip(leaves, grads):
            if g is None:
                continue
            leaf.grad = g.data.copy() if leaf.grad is None else leaf.grad + g.data

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sqrt(self):
        return sqrt(self)

    def relu(self):
        return relu(self)

    def sigmoid(self):
        return sigmoid(self)

    def tanh(self):
        return tanh(self)


def tensor(data, requires_grad=False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents: tuple, backward, op: str) -> Tensor:
    out = Tensor(data, op=op)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _topo(root: Tensor) -> list:
    """Nodes reachable from ``root`` that require grad, parents before children."""
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def _run_backward(output: Tensor, grad_output: Tensor, inputs: Sequence[Tensor],
                  create_graph: bool) -> list:
    order = _topo(output)
    wanted = {id(t) for t in inputs}
    grads = {id(output): grad_output}
    results = {}
    with set_grad_enabled(create_graph):
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if id(node) in wanted:
                results[id(node)] = g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
    return [results.get(id(t)) for t in inputs]


def grad(output: Tensor, inputs: Sequence[Tensor], grad_output=None,
         create_graph: bool = False) -> list:
    """Gradients of ``output`` with respect to ``inputs`` (None where unused).

    With ``create_graph`` the returned tensors carry their own graph and can
    be differentiated again.
    """
    if not output.requires_grad:
        raise StateError("output does not depend on any tensor that requires grad")
    if grad_output is None:
        if output.size != 1:
            raise ShapeError("grad() without grad_output needs a scalar output")
        grad_output = Tensor(np.ones_like(output.data))
    return _run_backward(output, as_tensor(grad_output), list(inputs), create_graph)


# -- primitive ops --------------------------------------------------------

def _unbroadcast(g: Tensor, shape: tuple) -> Tensor:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    axes = tuple(range(extra)) + tuple(
        i + extra for i, s in enumerate(shape) if s == 1 and g.shape[i + extra] != 1)
    out = sum_(g, axes, keepdims=True) if axes else g
    return reshape(out, shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(neg(g), b.shape)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(mul(g, b), a.shape), _unbroadcast(mul(g, a), b.shape)),
                 "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = _unbroadcast(div(g, b), a.shape)
        gb = _unbroadcast(neg(div(mul(g, a), mul(b, b))), b.shape)
        return ga, gb

    return _make(a.data / b.data, (a, b), backward, "div")


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _make(-a.data, (a,), lambda g: (neg(g),), "neg")


def power(a, p: float) -> Tensor:
    a = as_tensor(a)
    if isinstance(p, Tensor):
        raise TypeError("only scalar exponents are supported")
    p = float(p)
    return _make(a.data ** p, (a,), lambda g: (mul(g, mul(p, power(a, p - 1))),), "pow")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    return _make(a.data @ b.data, (a, b),
                 lambda g: (matmul(g, transpose(b)), matmul(transpose(a), g)), "matmul")


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.T, (a,), lambda g: (transpose(g),), "transpose")


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.reshape(shape), (a,), lambda g: (reshape(g, a.shape),), "reshape")


def broadcast_to(a, shape) -> Tensor:
    a = as_tensor(a)
    return _make(np.broadcast_to(a.data, shape).copy(), (a,),
                 lambda g: (_unbroadcast(g, a.shape),), "broadcast")


def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum_(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    kept_shape = tuple(1 if i in axes else s for i, s in enumerate(a.shape))

    def backward(g):
        return (broadcast_to(reshape(g, kept_shape), a.shape),)

    return _make(a.data.sum(axis=axes, keepdims=keepdims), (a,), backward, "sum")


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return mul(sum_(a, axes, keepdims), 1.0 / count)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.exp(a.data), (a,), None, "exp")
    if out.requires_grad:
        out._backward = lambda g: (mul(g, out),)
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (div(g, a),), "log")


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.sqrt(a.data), (a,), None, "sqrt")
    if out.requires_grad:
        out._backward = lambda g: (div(mul(g, 0.5), out),)
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = Tensor((a.data > 0).astype(np.float64))
    return _make(a.data * mask.data, (a,), lambda g: (mul(g, mask),), "relu")


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    mask = Tensor(np.where(a.data > 0, 1.0, slope))
    return _make(a.data * mask.data, (a,), lambda g: (mul(g, mask),), "leaky_relu")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    val = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = _make(val, (a,), None, "sigmoid")
    if out.requires_grad:
        out._backward = lambda g: (mul(g, mul(out, sub(1.0, out))),)
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.tanh(a.data), (a,), None, "tanh")
    if out.requires_grad:
        out._backward = lambda g: (mul(g, sub(1.0, mul(out, out))),)
    return out


def index(a, key) -> Tensor:
    """``a[key]`` for basic or advanced numpy keys."""
    a = as_tensor(a)
    return _make(a.data[key], (a,), lambda g: (scatter_add(g, key, a.shape),), "index")


def _is_basic(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(k, (slice, int, np.integer)) or k is None or k is Ellipsis
               for k in parts)


def scatter_add(g, key, shape) -> Tensor:
    """Zeros of ``shape`` with ``g`` added at ``key`` (adjoint of ``index``)."""
    g = as_tensor(g)
    out = np.zeros(shape)
    if _is_basic(key):
        out[key] += g.data  # basic keys never repeat a cell
    else:
        np.add.at(out, key, g.data)
    return _make(out, (g,), lambda gg: (index(gg, key),), "scatter_add")


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            key = [slice(None)] * g.ndim
            key[axis] = slice(int(lo), int(hi))
            out.append(index(g, tuple(key)))
        return tuple(out)

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                 backward, "concat")


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    expanded = []
    for t in tensors:
        shape = list(t.shape)
        shape.insert(axis % (t.ndim + 1), 1)
        expanded.append(reshape(t, tuple(shape)))
    return concat(expanded, axis=axis)


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = sub(a, Tensor(a.data.max(axis=axis, keepdims=True)))
    e = exp(shifted)
    return div(e, sum_(e, axis, keepdims=True))


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = sub(a, Tensor(a.data.max(axis=axis, keepdims=True)))
    return sub(shifted, log(sum_(exp(shifted), axis, keepdims=True)))
