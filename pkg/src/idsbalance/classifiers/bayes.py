"""Multinomial naive Bayes over nonnegative pseudo-count features."""
from __future__ import annotations

import numpy as np

from ..data.schema import N_CLASSES
from ..errors import InputError
from .base import Classifier


def check_nonnegative(x: np.ndarray) -> None:
    bad = np.argwhere(x < 0)
    if bad.size:
        row, col = (int(v) for v in bad[0])
        err = InputError(f"multinomial NB needs nonnegative features; row {row}, column {col} "
                         f"is {x[row, col]!r}")
        err.row, err.column = row, col
        raise err


class MultinomialNB(Classifier):
    """argmax_L log P(L) + sum_j x_j log theta_{L,j} with alpha-smoothed theta."""

    kind = "nb"

    def _fit(self, x, y):
        check_nonnegative(x)
        alpha = float(self.params["alpha"])
        counts = np.bincount(y, minlength=N_CLASSES).astype(np.float64)
        self.log_prior = np.full(N_CLASSES, -np.inf)
        seen = counts > 0
        self.log_prior[seen] = np.log(counts[seen] / counts.sum())
        fsum = np.zeros((N_CLASSES, x.shape[1]))
        np.add.at(fsum, y, x)
        smoothed = fsum + alpha
        total = smoothed.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.log_theta = np.where(total > 0, np.log(smoothed) - np.log(total), 0.0)

    def joint_log_likelihood(self, x) -> np.ndarray:
        """Unnormalized log posterior per class; unseen classes are ``-inf``."""
        check_nonnegative(x)
        jll = x @ self.log_theta.T + self.log_prior
        return np.where(self.seen_mask, jll, -np.inf)

    def _scores(self, x):
        jll = self.joint_log_likelihood(x)
        jll = jll - jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def get_state(self):
        lp = np.where(np.isfinite(self.log_prior), self.log_prior, 0.0)
        return {"log_prior": lp, "log_theta": self.log_theta}, {}

    def set_state(self, tensors, header):
        self.log_prior = np.where(self.seen_mask, tensors["log_prior"], -np.inf)
        self.log_theta = tensors["log_theta"]
