"""Adam optimizer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor

CLASSIFIER_BETAS = (0.9, 0.999)
GAN_BETAS = (0.5, 0.9)


@dataclass
class AdamState:
    lr: float = 1e-3
    betas: tuple = CLASSIFIER_BETAS
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence, **kw) -> "AdamState":
        state = cls(**kw)
        state.m = [np.zeros(np.shape(_arr(p))) for p in params]
        state.v = [np.zeros(np.shape(_arr(p))) for p in params]
        return state


def _arr(p):
    return p.data if isinstance(p, Tensor) else np.asarray(p)


def adam_step(state: AdamState, params: Sequence, grads: Sequence) -> list:
    """Apply one bias-corrected Adam update.

    ``params`` are Tensors (updated in place) or arrays (copied); the updated
    arrays are returned in either case.
    """
    if not (len(params) == len(grads) == len(state.m)):
        raise ShapeError("params, grads and optimizer state have different lengths")
    b1, b2 = state.betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    out = []
    for k, (p, g) in enumerate(zip(params, grads)):
        value = _arr(p)
        if g is None:
            out.append(value)
            continue
        g = np.asarray(g, dtype=np.float64)
        if g.shape != value.shape or state.m[k].shape != value.shape:
            raise ShapeError(f"gradient {g.shape} does not match parameter {value.shape}")
        m, v = state.m[k], state.v[k]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        if isinstance(p, Tensor):
            p.data = p.data - update
            out.append(p.data)
        else:
            out.append(value - update)
    return out


class Adam:
    def __init__(self, params: Sequence[Tensor], lr=1e-3, betas=CLASSIFIER_BETAS, eps=1e-8):
        self.params = list(params)
        self.state = AdamState.for_params(self.params, lr=lr, betas=tuple(betas), eps=eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.state, self.params, [p.grad for p in self.params])
