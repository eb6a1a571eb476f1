"""One-vs-rest linear SVM with an L1 penalty, trained by subgradient descent."""
from __future__ import annotations

import logging

import numpy as np

from ..data.schema import N_CLASSES
from ..errors import DivergenceError
from .base import Classifier

log = logging.getLogger(__name__)


def hinge_objective(x, y_pm, w, b, c) -> np.ndarray:
    """``||w||_1 + C * sum_i max(0, 1 - y_i (w.x_i + b))`` for each row of ``w``.

    ``y_pm`` is ``(n, K)`` in {-1, +1}; ``w`` is ``(K, D)``; returns ``(K,)``.
    """
    margins = y_pm * (x @ w.T + b)
    return np.abs(w).sum(axis=1) + c * np.maximum(0.0, 1.0 - margins).sum(axis=0)


class LinearSVM(Classifier):
    """Prediction is the argmax decision value; ties go to the more frequent class."""

    kind = "svm"

    def _fit(self, x, y):
        p = self.params
        c, lr0 = float(p["C"]), float(p["lr"])
        n, d = x.shape
        k = self.classes_.size
        y_pm = np.where(y[:, None] == self.classes_[None, :], 1.0, -1.0)
        self.class_counts = np.bincount(y, minlength=N_CLASSES)
        w, b = np.zeros((k, d)), np.zeros(k)
        best_w, best_b = w.copy(), b.copy()
        best = hinge_objective(x, y_pm, w, b, c)
        batch = max(1, min(int(p["batch"]), n))
        rng = np.random.default_rng([self.spec.seed, 5])
        for epoch in range(1, int(p["epochs"]) + 1):
            lr = lr0 / epoch
            order = rng.permutation(n)
            with np.errstate(over="ignore", invalid="ignore"):
                for start in range(0, n, batch):
                    rows = order[start:start + batch]
                    xb, yb = x[rows], y_pm[rows]
                    active = (yb * (xb @ w.T + b)) < 1.0
                    coef = -c * (n / rows.size) * (active * yb)
                    w -= lr * (np.sign(w) + coef.T @ xb)
                    b -= lr * coef.sum(axis=0)
                obj = hinge_objective(x, y_pm, w, b, c)
            if not np.isfinite(obj).all():
                raise DivergenceError(f"svm objective is non-finite at epoch {epoch}", epoch=epoch)
            improved = obj < best
            best_w[improved], best_b[improved] = w[improved], b[improved]
            best = np.minimum(best, obj)
        self.coef, self.intercept = best_w, best_b
        log.debug("svm objective per class: %s", best)

    def decision_function(self, x) -> np.ndarray:
        return x @ self.coef.T + self.intercept

    def _scores(self, x):
        dec = self.decision_function(x)
        out = np.empty((x.shape[0], N_CLASSES))
        out[:] = (dec.min(axis=1) - 1.0)[:, None]
        out[:, self.classes_] = dec
        return out

    def predict(self, x) -> np.ndarray:
        dec = self.predict_scores(x)[:, self.classes_]
        tied = dec == dec.max(axis=1, keepdims=True)
        # among tied classes, the most frequent in training wins, then the lowest index
        freq = self.class_counts[self.classes_].astype(np.float64)
        rank = np.where(tied, freq[None, :] - self.classes_[None, :] / (2.0 * N_CLASSES), -np.inf)
        return self.classes_[np.argmax(rank, axis=1)].astype(np.int64)

    def get_state(self):
        return {"coef": self.coef, "intercept": self.intercept,
                "class_counts": self.class_counts.astype(np.float64)}, {}

    def set_state(self, tensors, header):
        self.coef, self.intercept = tensors["coef"], tensors["intercept"]
        self.class_counts = tensors["class_counts"].astype(np.int64)
