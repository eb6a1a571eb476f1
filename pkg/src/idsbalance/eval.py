"""Confusion matrices, support-weighted metrics and Welch's two-sample t-test."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .data.schema import CLASS_NAMES
from .errors import InputError

# smallest positive double; p-values are reported in (0, 1]
P_FLOOR = 5e-324


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns are predicted classes."""

    grid: np.ndarray
    classes: tuple = CLASS_NAMES

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.int64)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] != len(self.classes):
            raise InputError(f"confusion grid {g.shape} does not match {len(self.classes)} classes")
        if (g < 0).any():
            raise InputError("confusion counts must be non-negative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def total(self) -> int:
        return int(self.grid.sum())

    def one_vs_rest(self, k: int) -> tuple:
        """``(tp, fp, fn, tn)`` for class ``k``."""
        tp = int(self.grid[k, k])
        fp = int(self.grid[:, k].sum()) - tp
        fn = int(self.grid[k].sum()) - tp
        return tp, fp, fn, self.total - tp - fp - fn

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\pred"] + list(self.classes))
        for name, row in zip(self.classes, self.grid.tolist()):
            w.writerow([name] + row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConfusionMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        classes = tuple(rows[0][1:])
        return cls(np.array([[int(v) for v in r[1:]] for r in rows[1:]]), classes)


def confusion(true, pred, classes: Sequence[str] = CLASS_NAMES) -> ConfusionMatrix:
    true = np.asarray(true, dtype=np.int64).reshape(-1)
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    if true.size != pred.size:
        raise InputError(f"{true.size} true labels but {pred.size} predictions")
    n = len(classes)
    for arr in (true, pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InputError(f"labels must lie in 0..{n - 1}")
    grid = np.bincount(true * n + pred, minlength=n * n).reshape(n, n)
    return ConfusionMatrix(grid, tuple(classes))


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: tuple
    zero_division: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "per_class": [dict(c) for c in self.per_class],
                "zero_division": list(self.zero_division)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        """Flat ``key=value`` lines."""
        lines = [f"{k}={getattr(self, k)!r}" for k in ("accuracy", "precision", "recall", "f1")]
        for c in self.per_class:
            for k in ("precision", "recall", "f1", "support"):
                lines.append(f"{c['name']}.{k}={c[k]!r}")
        lines.append("zero_division=" + ",".join(self.zero_division))
        return "\n".join(lines) + "\n"


def weighted_metrics(cm: ConfusionMatrix) -> MetricReport:
    """Accuracy = trace/total; precision, recall and F1 are support-weighted.

    A per-class ratio with a zero denominator is 0, and ``zero_division``
    records which one (for example ``"U2R.precision"``).
    """
    total = cm.total
    if total == 0:
        raise InputError("cannot compute metrics from an empty confusion matrix")
    per, flags = [], []
    for k, name in enumerate(cm.classes):
        tp, fp, fn, _ = cm.one_vs_rest(k)
        support = tp + fn
        if tp + fp == 0:
            flags.append(f"{name}.precision")
        if support == 0:
            flags.append(f"{name}.recall")
        pre = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / support if support else 0.0
        f1 = 2 * pre * rec / (pre + rec) if pre + rec else 0.0
        per.append({"name": name, "precision": pre, "recall": rec, "f1": f1, "support": support})
    w = np.array([c["support"] for c in per], dtype=np.float64) / total

    def avg(key):
        return float(np.dot(w, [c[key] for c in per]))

    return MetricReport(float(np.trace(cm.grid)) / total, avg("precision"), avg("recall"),
                        avg("f1"), tuple(per), tuple(flags))


def _sample(v, name) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size < 2:
        raise InputError(f"sample {name} needs at least 2 values, got {v.size}")
    if not np.isfinite(v).all():
        raise InputError(f"sample {name} contains non-finite values")
    return v


def welch_df(a, b) -> float:
    """Welch-Satterthwaite degrees of freedom."""
    a, b = _sample(a, "a"), _sample(b, "b")
    sa, sb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    if sa + sb == 0:
        return float(a.size + b.size - 2)
    # scale-free form, so tiny variances cannot underflow to 0/0
    m = max(sa, sb)
    sa, sb = sa / m, sb / m
    return float((sa + sb) ** 2 / (sa ** 2 / (a.size - 1) + sb ** 2 / (b.size - 1)))


def welch_ttest(a, b) -> tuple:
    """Welch's unequal-variance t statistic and two-sided p-value.

    The p-value is ``I_{df/(df+t^2)}(df/2, 1/2)``, the regularized incomplete
    beta form of the Student-t tail, clamped to the smallest positive double.
    """
    a, b = _sample(a, "a"), _sample(b, "b")
    diff = a.mean() - b.mean()
    se2 = a.var(ddof=1) / a.size + b.var(ddof=1) / b.size
    if se2 == 0:
        if diff == 0:
            return 0.0, 1.0
        return float(np.copysign(np.inf, diff)), P_FLOOR
    t = float(diff / np.sqrt(se2))
    df = welch_df(a, b)
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, min(1.0, max(P_FLOOR, p))


def compare_experiments(correct_a, correct_b) -> float:
    """p-value of Welch's test on two per-sample 0/1 correctness vectors."""
    a = np.asarray(correct_a, dtype=np.float64).reshape(-1)
    b = np.asarray(correct_b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise InputError(f"correctness vectors differ in length ({a.size} vs {b.size})")
    if not (np.isin(a, (0.0, 1.0)).all() and np.isin(b, (0.0, 1.0)).all()):
        raise InputError("correctness vectors must contain only 0 and 1")
    return welch_ttest(a, b)[1]
