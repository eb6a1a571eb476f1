"""Column codecs and the GAN-space row layout.

A GAN-space row concatenates, in column order, one span per column:

* continuous: ``[alpha, beta_1 .. beta_K]`` (scaled offset, then mode one-hot)
* discrete:   ``[onehot_1 .. onehot_C]`` over the categories seen in training

The condition vector concatenates the discrete one-hot spans only.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import InputError, StateError
from ..gmm import ColumnGMM, denormalize_column, fit_column_gmm, normalize_column

DISCRETE = "discrete"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class ColumnCodec:
    """Transformation state for one column.

    ``categories`` holds the sorted category values (numeric codes) of a
    discrete column. ``low``/``high`` bound a continuous column's observed
    range; decoded values are clipped into it.
    """

    name: str
    kind: str
    categories: Optional[tuple] = None
    gmm: Optional[ColumnGMM] = None
    low: Optional[float] = None
    high: Optional[float] = None

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    @property
    def fitted(self) -> bool:
        return bool(self.categories) if self.is_discrete else self.gmm is not None

    @property
    def span_width(self) -> int:
        if not self.fitted:
            raise StateError(f"column {self.name!r} has not been fitted")
        return len(self.categories) if self.is_discrete else 1 + self.gmm.n_modes

    def category_index(self, value) -> int:
        try:
            return self.categories.index(float(value))
        except ValueError:
            raise InputError(f"column {self.name!r} has no category {value!r}") from None

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.is_discrete:
            d["categories"] = list(self.categories)
        else:
            d["gmm"] = self.gmm.to_dict() if self.gmm else None
            d["low"], d["high"] = self.low, self.high
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnCodec":
        if d["kind"] == DISCRETE:
            return cls(d["name"], DISCRETE, tuple(float(c) for c in d["categories"]))
        gmm = ColumnGMM.from_dict(d["gmm"]) if d.get("gmm") else None
        return cls(d["name"], CONTINUOUS, gmm=gmm, low=d.get("low"), high=d.get("high"))


def fit_codecs(matrix, names: Sequence[str], discrete: Sequence[bool], max_modes: int = 10,
               seed: int = 0) -> list:
    """Fit one codec per column of ``matrix`` (rows x columns).

    Continuous column ``j`` is fitted with seed ``seed + j`` so columns are
    independent of each other and of fitting order.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(names) or len(names) != len(discrete):
        raise InputError("matrix, names and discrete flags disagree on the column count")
    if matrix.shape[0] == 0:
        raise InputError("cannot fit codecs on an empty table")
    codecs = []
    for j, (name, is_disc) in enumerate(zip(names, discrete)):
        col = matrix[:, j]
        if is_disc:
            codecs.append(ColumnCodec(name, DISCRETE, tuple(float(v) for v in np.unique(col))))
        else:
            gmm = fit_column_gmm(col, max_modes=max_modes, seed=seed + j, column=name)
            codecs.append(ColumnCodec(name, CONTINUOUS, gmm=gmm, low=float(col.min()),
                                      high=float(col.max())))
    return codecs


def codecs_hash(codecs: Sequence[ColumnCodec]) -> str:
    blob = json.dumps([c.to_dict() for c in codecs], sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Span:
    column: int
    name: str
    kind: str
    start: int
    end: int
    cond_start: Optional[int] = None  # offset in the condition vector, discrete only

    @property
    def width(self) -> int:
        return self.end - self.start

    @property
    def onehot(self) -> slice:
        """The one-hot part: the whole span for discrete, the mode slots for continuous."""
        return slice(self.start if self.kind == DISCRETE else self.start + 1, self.end)

    @property
    def cond(self) -> Optional[slice]:
        return None if self.cond_start is None else slice(self.cond_start, self.cond_start + self.width)


@dataclass(frozen=True)
class RowLayout:
    spans: tuple
    width: int
    cond_width: int

    @property
    def discrete_spans(self) -> tuple:
        return tuple(s for s in self.spans if s.kind == DISCRETE)

    @property
    def continuous_spans(self) -> tuple:
        return tuple(s for s in self.spans if s.kind == CONTINUOUS)

    def span_of(self, name: str) -> Span:
        for s in self.spans:
            if s.name == name:
                return s
        raise InputError(f"no column named {name!r}")

    def to_dict(self) -> dict:
        return {"width": self.width, "cond_width": self.cond_width,
                "spans": [[s.column, s.name, s.kind, s.start, s.end, s.cond_start]
                          for s in self.spans]}

    @classmethod
    def from_dict(cls, d: dict) -> "RowLayout":
        return cls(tuple(Span(*s) for s in d["spans"]), d["width"], d["cond_width"])


def build_layout(codecs: Sequence[ColumnCodec]) -> RowLayout:
    spans, pos, cond = [], 0, 0
    for j, c in enumerate(codecs):
        w = c.span_width
        if c.is_discrete:
            spans.append(Span(j, c.name, DISCRETE, pos, pos + w, cond))
            cond += w
        else:
            spans.append(Span(j, c.name, CONTINUOUS, pos, pos + w))
        pos += w
    return RowLayout(tuple(spans), pos, cond)


def transform(codecs: Sequence[ColumnCodec], layout: RowLayout, matrix, rng,
              modes: Optional[dict] = None) -> np.ndarray:
    """Map raw rows to GAN space.

    Random draws: one uniform per row for each continuous column, column by
    column in layout order. ``modes`` may force the mode index of continuous
    columns (``{column index: array of modes}``); forced columns draw nothing.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(codecs):
        raise InputError(f"rows must have {len(codecs)} cells")
    n = matrix.shape[0]
    out = np.zeros((n, layout.width))
    rows = np.arange(n)
    for span, codec in zip(layout.spans, codecs):
        col = matrix[:, span.column]
        if codec.is_discrete:
            cats = np.asarray(codec.categories)
            idx = np.searchsorted(cats, col)
            ok = (idx < cats.size) & (cats[np.minimum(idx, cats.size - 1)] == col)
            if not ok.all():
                bad = col[~ok][0]
                raise InputError(f"column {codec.name!r}: value {bad!r} is outside the fitted categories")
            out[rows, span.start + idx] = 1.0
        else:
            forced = None if modes is None else modes.get(span.column)
            alpha, k = normalize_column(codec.gmm, col, rng, forced)
            out[:, span.start] = alpha
            out[rows, span.start + 1 + k] = 1.0
    return out


def inverse_transform(codecs: Sequence[ColumnCodec], layout: RowLayout, vectors,
                      clip: bool = True) -> np.ndarray:
    """Map GAN-space vectors back to raw rows.

    One-hot spans are read by argmax (ties go to the first slot); alpha slots
    are clipped to [-1, 1] before denormalization and, with ``clip``, the
    result is clipped to the column's observed range.
    """
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != layout.width:
        raise InputError(f"vectors must have width {layout.width}")
    if not np.isfinite(v).all():
        raise InputError("GAN-space vectors contain non-finite entries")
    out = np.empty((v.shape[0], len(codecs)))
    for span, codec in zip(layout.spans, codecs):
        k = np.argmax(v[:, span.onehot], axis=1)
        if codec.is_discrete:
            out[:, span.column] = np.asarray(codec.categories)[k]
        else:
            alpha = np.clip(v[:, span.start], -1.0, 1.0)
            vals = denormalize_column(codec.gmm, alpha, k)
            if clip and codec.low is not None:
                vals = np.clip(vals, codec.low, codec.high)
            out[:, span.column] = vals
    return out


def transform_row(codecs, layout, row, rng, modes: Optional[dict] = None) -> np.ndarray:
    forced = None if modes is None else {j: [m] for j, m in modes.items()}
    return transform(codecs, layout, np.asarray(row, dtype=np.float64)[None, :], rng, forced)[0]


def inverse_transform_row(codecs, layout, vector) -> np.ndarray:
    return inverse_transform(codecs, layout, np.asarray(vector, dtype=np.float64)[None, :])[0]
