"""One-dimensional Gaussian mixtures and mode-specific normalization.

A continuous column is summarised by a mixture fitted with EM. Each value is
then represented by a sampled mode ``k`` and a scaled offset
``alpha = (v - mu_k) / (4 sigma_k)`` clipped to [-1, 1].

The number of modes is chosen by BIC over ``k = 1..max_modes`` (the scan
stops early once BIC stops improving) and the winning fit is pruned of
components lighter than ``PRUNE_WEIGHT``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import InputError, InvalidValueError

log = logging.getLogger(__name__)

MAX_MODES = 10
PRUNE_WEIGHT = 0.005
STD_FLOOR = 1e-4
MAX_ITER = 300
TOL = 1e-6
# beyond this many rows the fit uses a seeded subsample
MAX_FIT_ROWS = 20_000
# stop growing k after this many candidates in a row fail to improve BIC
BIC_PATIENCE = 2

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ColumnGMM:
    """A fitted mixture: parallel arrays of weights, means and standard deviations."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    max_modes: int = MAX_MODES
    column: Optional[str] = None

    def __post_init__(self):
        for name in ("weights", "means", "stds"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        k = self.weights.size
        if not (self.means.size == self.stds.size == k) or k < 1:
            raise InputError("weights, means and stds must be non-empty and equally long")
        if k > self.max_modes:
            raise InputError(f"{k} modes exceed max_modes={self.max_modes}")
        if (self.weights <= 0).any() or abs(self.weights.sum() - 1.0) > 1e-9:
            raise InputError("mixture weights must be positive and sum to 1")
        if (self.stds < STD_FLOOR).any():
            raise InputError(f"standard deviations must be at least {STD_FLOOR}")

    @property
    def n_modes(self) -> int:
        return int(self.weights.size)

    def to_dict(self) -> dict:
        return {"column": self.column, "max_modes": self.max_modes,
                "weights": self.weights.tolist(), "means": self.means.tolist(),
                "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnGMM":
        return cls(d["weights"], d["means"], d["stds"], d.get("max_modes", MAX_MODES),
                   d.get("column"))


@dataclass(frozen=True)
class ModeNormalizedValue:
    alpha: float
    mode_onehot: np.ndarray

    @property
    def mode(self) -> int:
        return int(np.argmax(self.mode_onehot))


@dataclass
class EMResult:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    log_likelihood: list = field(default_factory=list)  # total LL after each E-step
    converged: bool = False

    @property
    def final_ll(self) -> float:
        return self.log_likelihood[-1]


def _kmeanspp(x, w, k, rng):
    """Seeded k-means++ centres over distinct values ``x`` with multiplicities ``w``."""
    p = w / w.sum()
    centres = [x[rng.choice(x.size, p=p)]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centres)[None, :]) ** 2, axis=1) * w
        total = d2.sum()
        if total <= 0:
            break
        centres.append(x[rng.choice(x.size, p=d2 / total)])
    return np.array(centres)


def _component_logpdf(x, means, stds):
    z = (x[:, None] - means[None, :]) / stds[None, :]
    return -0.5 * (z * z + _LOG_2PI) - np.log(stds)[None, :]


def em_1d(values, k: int, rng, counts=None, max_iter: int = MAX_ITER, tol: float = TOL,
          std_floor: float = STD_FLOOR) -> EMResult:
    """EM for a ``k``-component 1-D mixture.

    ``counts`` gives a multiplicity per value, so repeated values can be
    passed once. The log-likelihood history is non-decreasing: the variance
    floor is applied as a constraint inside the M-step, never afterwards.
    """
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    c = np.ones_like(x) if counts is None else np.asarray(counts, dtype=np.float64)
    n = c.sum()
    centres = _kmeanspp(x, c, k, rng)
    k = centres.size
    assign = np.argmin(np.abs(x[:, None] - centres[None, :]), axis=1)
    weights = np.empty(k)
    means = np.empty(k)
    stds = np.empty(k)
    for j in range(k):
        m = assign == j
        cj = c[m]
        weights[j] = cj.sum() / n
        means[j] = np.average(x[m], weights=cj)
        stds[j] = max(std_floor, np.sqrt(np.average((x[m] - means[j]) ** 2, weights=cj)))

    result = EMResult(weights, means, stds)
    prev = -np.inf
    for _ in range(max_iter):
        with np.errstate(divide="ignore"):
            logp = _component_logpdf(x, means, stds) + np.log(weights)[None, :]
        norm = logsumexp(logp, axis=1)
        ll = float(np.dot(c, norm))
        result.log_likelihood.append(ll)
        if (ll - prev) / n < tol:
            result.converged = True
            break
        prev = ll
        resp = np.exp(logp - norm[:, None]) * c[:, None]
        nk = resp.sum(axis=0)
        live = nk > 1e-12 * n
        weights = nk / n
        new_means = means.copy()
        new_means[live] = (resp[:, live] * x[:, None]).sum(axis=0) / nk[live]
        var = (resp[:, live] * (x[:, None] - new_means[live][None, :]) ** 2).sum(axis=0) / nk[live]
        new_stds = stds.copy()
        new_stds[live] = np.maximum(np.sqrt(var), std_floor)
        means, stds = new_means, new_stds
    result.weights, result.means, result.stds = weights, means, stds
    return result


def _bic(ll: float, k: int, n: float) -> float:
    return -2.0 * ll + (3 * k - 1) * np.log(n)


def fit_column_gmm(values, max_modes: int = MAX_MODES, seed=0, column: Optional[str] = None,
                   prune_weight: float = PRUNE_WEIGHT, max_iter: int = MAX_ITER,
                   tol: float = TOL, max_rows: int = MAX_FIT_ROWS,
                   patience: int = BIC_PATIENCE) -> ColumnGMM:
    """Fit a mixture to one continuous column.

    Parameters
    ----------
    values : array_like
        The column. Must be non-empty and finite.
    max_modes : int
        Upper bound on the number of components.
    seed : int or numpy.random.Generator
        Drives the k-means++ initialisation and any subsampling.
    """
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise InputError("cannot fit a mixture to an empty column")
    bad = ~np.isfinite(x)
    if bad.any():
        raise InvalidValueError(f"non-finite value at row {int(np.argmax(bad))}",
                                row=int(np.argmax(bad)), column=column)
    if max_modes < 1:
        raise InputError("max_modes must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if x.size > max_rows:
        x = x[np.sort(rng.choice(x.size, size=max_rows, replace=False))]
    uniq, counts = np.unique(x, return_counts=True)
    if uniq.size == 1:
        return ColumnGMM([1.0], [uniq[0]], [STD_FLOOR], max_modes, column)

    n = float(x.size)
    best, best_bic, stale = None, np.inf, 0
    for k in range(1, min(max_modes, uniq.size) + 1):
        res = em_1d(uniq, k, rng, counts=counts, max_iter=max_iter, tol=tol)
        bic = _bic(res.final_ll, res.weights.size, n)
        if bic < best_bic:
            best, best_bic, stale = res, bic, 0
        else:
            stale += 1
            if stale >= patience:
                break
    keep = best.weights >= prune_weight
    if not keep.any():
        keep = best.weights == best.weights.max()
    order = np.argsort(best.means[keep], kind="stable")
    w = best.weights[keep][order]
    gmm = ColumnGMM(w / w.sum(), best.means[keep][order], best.stds[keep][order], max_modes, column)
    log.debug("column %s: %d modes (BIC %.3f)", column, gmm.n_modes, best_bic)
    return gmm


def mode_probabilities(gmm: ColumnGMM, value) -> np.ndarray:
    """Responsibilities ``w_k N(v; mu_k, sigma_k)`` normalised over modes.

    A scalar gives shape (K,); an array of n values gives (n, K).
    """
    v = np.asarray(value, dtype=np.float64)
    logp = _component_logpdf(v.reshape(-1), gmm.means, gmm.stds) + np.log(gmm.weights)[None, :]
    probs = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
    return probs[0] if v.ndim == 0 else probs


def normalize_column(gmm: ColumnGMM, values, rng, modes=None):
    """Vectorised normalization; returns ``(alpha, mode_index)`` arrays.

    One uniform draw per value is consumed, in row order, unless ``modes``
    forces the mode choice.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if modes is None:
        probs = mode_probabilities(gmm, v)
        if v.size == 0:
            probs = probs.reshape(0, gmm.n_modes)
        u = rng.random(v.size)
        cdf = np.cumsum(probs, axis=1)
        modes = np.minimum((u[:, None] >= cdf).sum(axis=1), gmm.n_modes - 1)
    else:
        modes = np.broadcast_to(np.asarray(modes, dtype=np.int64), v.shape)
        if modes.size and (modes.min() < 0 or modes.max() >= gmm.n_modes):
            raise InputError(f"mode index outside 0..{gmm.n_modes - 1}")
    alpha = np.clip((v - gmm.means[modes]) / (4.0 * gmm.stds[modes]), -1.0, 1.0)
    return alpha, np.asarray(modes, dtype=np.int64)


def normalize_value(gmm: ColumnGMM, value: float, rng, mode: Optional[int] = None) -> ModeNormalizedValue:
    """Sample a mode from the responsibilities and express ``value`` relative to it."""
    alpha, modes = normalize_column(gmm, [value], rng, None if mode is None else [mode])
    onehot = np.zeros(gmm.n_modes)
    onehot[modes[0]] = 1.0
    return ModeNormalizedValue(float(alpha[0]), onehot)


def denormalize_column(gmm: ColumnGMM, alpha, modes) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    modes = np.asarray(modes, dtype=np.int64)
    if modes.size and (modes.min() < 0 or modes.max() >= gmm.n_modes):
        raise InputError(f"mode index outside 0..{gmm.n_modes - 1}")
    return alpha * 4.0 * gmm.stds[modes] + gmm.means[modes]


def denormalize_value(gmm: ColumnGMM, nv: ModeNormalizedValue) -> float:
    onehot = np.asarray(nv.mode_onehot, dtype=np.float64)
    if (onehot.shape != (gmm.n_modes,) or not np.isin(onehot, (0.0, 1.0)).all()
            or onehot.sum() != 1.0):
        raise InputError(f"mode one-hot must have exactly one 1 among {gmm.n_modes} slots")
    return float(denormalize_column(gmm, nv.alpha, int(np.argmax(onehot))))
