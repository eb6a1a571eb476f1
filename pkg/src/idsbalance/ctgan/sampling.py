"""Condition vectors and training-by-sampling.

A condition picks one discrete column uniformly, then one of its categories
with probability proportional to ``log(1 + count)``, so rare categories are
seen far more often than their frequency alone would allow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConditionUnsatisfiableError, ConfigurationError, InputError
from .layout import RowLayout


@dataclass(frozen=True)
class CondVector:
    vector: np.ndarray
    column: int     # index into the discrete columns, in layout order
    category: int   # index into that column's categories


@dataclass(frozen=True)
class FrequencyTables:
    """Category counts per discrete column, in layout order."""

    counts: tuple

    @property
    def n_columns(self) -> int:
        return len(self.counts)

    def log_probs(self, j: int) -> np.ndarray:
        w = np.log1p(np.asarray(self.counts[j], dtype=np.float64))
        total = w.sum()
        if total <= 0:
            raise ConditionUnsatisfiableError(f"discrete column {j} has no observed categories")
        return w / total

    def empirical_probs(self, j: int) -> np.ndarray:
        c = np.asarray(self.counts[j], dtype=np.float64)
        return c / c.sum()


def frequency_tables(layout: RowLayout, transformed) -> FrequencyTables:
    t = np.asarray(transformed)
    return FrequencyTables(tuple(t[:, s.start:s.end].sum(axis=0) for s in layout.discrete_spans))


def condition_vectors(layout: RowLayout, columns, categories) -> np.ndarray:
    """One-hot condition rows for paired (discrete column, category) indices."""
    columns = np.asarray(columns, dtype=np.int64)
    categories = np.asarray(categories, dtype=np.int64)
    out = np.zeros((columns.size, layout.cond_width))
    starts = np.array([s.cond_start for s in layout.discrete_spans], dtype=np.int64)
    if columns.size:
        out[np.arange(columns.size), starts[columns] + categories] = 1.0
    return out


def sample_conditions(freqs: FrequencyTables, rng, n: int, empirical: bool = False):
    """Draw ``n`` (column, category) pairs.

    Random draws: ``n`` column integers, then one uniform per pair, in that
    order. ``empirical`` uses raw frequencies instead of log-frequencies.
    """
    if freqs.n_columns == 0:
        raise ConfigurationError("training-by-sampling needs at least one discrete column")
    cols = rng.integers(freqs.n_columns, size=n)
    u = rng.random(n)
    cats = np.empty(n, dtype=np.int64)
    for j in range(freqs.n_columns):
        m = cols == j
        if m.any():
            p = freqs.empirical_probs(j) if empirical else freqs.log_probs(j)
            cdf = np.cumsum(p)
            cats[m] = np.minimum(np.searchsorted(cdf, u[m], side="right"), p.size - 1)
    return cols, cats


def sample_condition(freqs: FrequencyTables, rng, layout: RowLayout = None) -> CondVector:
    cols, cats = sample_conditions(freqs, rng, 1)
    if layout is None:
        # stand-alone use: lay the columns out back to back
        sizes = [len(c) for c in freqs.counts]
        vec = np.zeros(sum(sizes))
        vec[sum(sizes[:cols[0]]) + cats[0]] = 1.0
    else:
        vec = condition_vectors(layout, cols, cats)[0]
    return CondVector(vec, int(cols[0]), int(cats[0]))


class RowIndex:
    """Row ids of the training table grouped by (discrete column, category)."""

    def __init__(self, layout: RowLayout, transformed):
        t = np.asarray(transformed)
        self._rows = {}
        for j, s in enumerate(layout.discrete_spans):
            cat = np.argmax(t[:, s.start:s.end], axis=1)
            order = np.argsort(cat, kind="stable")
            bounds = np.searchsorted(cat[order], np.arange(s.width + 1))
            for c in range(s.width):
                self._rows[(j, c)] = order[bounds[c]:bounds[c + 1]]

    def rows(self, column: int, category: int) -> np.ndarray:
        try:
            return self._rows[(column, category)]
        except KeyError:
            raise InputError(f"no discrete column/category pair ({column}, {category})") from None

    def sample(self, columns, categories, rng) -> np.ndarray:
        """One uniformly drawn matching row per pair (one uniform consumed per pair)."""
        columns = np.asarray(columns)
        categories = np.asarray(categories)
        u = rng.random(columns.size)
        out = np.empty(columns.size, dtype=np.int64)
        for i, (j, c) in enumerate(zip(columns.tolist(), categories.tolist())):
            cand = self.rows(j, c)
            if cand.size == 0:
                raise ConditionUnsatisfiableError(f"no training row has category {c} in discrete column {j}")
            out[i] = cand[min(int(u[i] * cand.size), cand.size - 1)]
        return out


def sample_conditioned_row(index: RowIndex, cond: CondVector, rng) -> int:
    return int(index.sample([cond.column], [cond.category], rng)[0])
