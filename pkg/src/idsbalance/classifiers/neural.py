"""FNN, LSTM and CNN classifiers built on ndiff, with early stopping."""
from __future__ import annotations

import logging

import numpy as np

from .. import ndiff
from ..data.schema import N_CLASSES
from ..errors import DivergenceError
from ..ndiff import LayerSpec, Network
from .base import Classifier

log = logging.getLogger(__name__)


def architecture(kind: str) -> list:
    """Layer stack for ``kind``; every stack ends in raw logits over the five classes."""
    if kind == "fnn":
        return [LayerSpec("dense", units=50), LayerSpec("relu"),
                LayerSpec("dense", units=30), LayerSpec("relu"),
                LayerSpec("dense", units=20), LayerSpec("relu"),
                LayerSpec("dense", units=N_CLASSES)]
    if kind == "lstm":
        return [LayerSpec("lstm", units=100, return_sequences=True),
                LayerSpec("lstm", units=100),
                LayerSpec("dense", units=N_CLASSES)]
    if kind == "cnn":
        return [LayerSpec("conv1d", filters=32, kernel=3), LayerSpec("relu"),
                LayerSpec("maxpool1d", pool=2), LayerSpec("flatten"),
                LayerSpec("dense", units=100), LayerSpec("relu"),
                LayerSpec("dense", units=N_CLASSES)]
    raise ValueError(kind)


def input_shape(kind: str, n_features: int) -> tuple:
    # sequence models read the features as a single-channel sequence
    return (n_features,) if kind == "fnn" else (n_features, 1)


def build_network(kind: str, n_features: int, seed: int = 0) -> Network:
    return Network(architecture(kind), input_shape(kind, n_features), seed=seed)


def _split_holdout(n: int, fraction: float, rng) -> tuple:
    n_hold = int(round(n * fraction))
    if n_hold < 1 or n - n_hold < 1:
        idx = np.arange(n)
        return idx, idx
    order = rng.permutation(n)
    return np.sort(order[n_hold:]), np.sort(order[:n_hold])


class NeuralClassifier(Classifier):
    """Softmax classifier trained with Adam on cross-entropy.

    Training stops after ``patience`` epochs without a lower held-out loss and
    the best weights are restored. Classes absent from training get score 0.
    """

    def __init__(self, spec):
        super().__init__(spec)
        self.kind = spec.kind
        self.net = None
        self.history: list = []

    def _shape(self, x):
        return x.reshape((x.shape[0],) + input_shape(self.kind, x.shape[1]))

    def _logits(self, x, training=False) -> ndiff.Tensor:
        return self.net(ndiff.Tensor(self._shape(x)), training=training)

    def _loss(self, x, onehot, training=False):
        logits = self._logits(x, training)
        mask = np.where(self.seen_mask, 0.0, -1e9)  # unseen classes never receive mass
        return ndiff.softmax_cross_entropy(logits + ndiff.Tensor(mask), onehot)

    def _fit(self, x, y):
        p = self.params
        self.net = build_network(self.kind, x.shape[1], seed=self.spec.seed)
        rng = np.random.default_rng([self.spec.seed, 3])
        train, hold = _split_holdout(x.shape[0], float(p["holdout"]), rng)
        onehot = np.eye(N_CLASSES)[y]
        params = self.net.parameters()
        opt = ndiff.Adam(params, lr=float(p["lr"]), betas=ndiff.CLASSIFIER_BETAS)
        batch = max(1, int(p["batch"]))
        best_loss, best_state, stale = np.inf, self.net.state_dict(), 0
        self.history = []
        for epoch in range(1, int(p["epochs"]) + 1):
            order = train[rng.permutation(train.size)]
            for bi, start in enumerate(range(0, order.size, batch)):
                rows = order[start:start + batch]
                opt.zero_grad()
                loss = self._loss(x[rows], onehot[rows], training=True)
                if not np.isfinite(loss.data):
                    raise DivergenceError(f"{self.kind}: non-finite loss at epoch {epoch}",
                                          epoch=epoch, batch=bi)
                loss.backward()
                opt.step()
            with ndiff.no_grad():
                held = float(self._loss(x[hold], onehot[hold]).data)
            if not np.isfinite(held):
                raise DivergenceError(f"{self.kind}: non-finite held-out loss at epoch {epoch}",
                                      epoch=epoch)
            self.history.append(held)
            if held < best_loss:
                best_loss, best_state, stale = held, self.net.state_dict(), 0
            else:
                stale += 1
                if stale >= int(p["patience"]):
                    log.info("%s: early stop at epoch %d (best held-out loss %.5f)",
                             self.kind, epoch, best_loss)
                    break
        self.net.load_state_dict(best_state)

    def _scores(self, x):
        out = []
        with ndiff.no_grad():
            for start in range(0, x.shape[0], 4096):
                logits = self._logits(x[start:start + 4096]).data
                logits = np.where(self.seen_mask, logits, -np.inf)
                logits = logits - logits.max(axis=1, keepdims=True)
                e = np.exp(logits)
                out.append(e / e.sum(axis=1, keepdims=True))
        return np.concatenate(out)

    def get_state(self):
        return self.net.state_dict(), {"history": self.history}

    def set_state(self, tensors, header):
        self.net = build_network(self.kind, self.n_features)
        self.net.load_state_dict(tensors)
        self.history = list(header.get("history", []))
