"""The in-memory feature table and its canonical on-disk form."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import DataError, InputError, ParseError, ShapeError
from .encoding import apply_l2_norms, apply_label_encoding, fit_l2_norms, fit_label_encoding
from .labels import AttackMap, map_attack_label
from .records import RawRecord
from .schema import CLASS_NAMES, FEATURES, N_CLASSES, SYMBOLIC, ClassLabel

DISCRETE = "discrete"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: str
    encoding_map: Optional[dict] = None
    l2_norm: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise ValueError(f"unknown column kind {self.kind!r}")
        if self.kind == DISCRETE and self.encoding_map is None:
            raise ValueError(f"discrete column {self.name!r} needs an encoding map")
        if self.l2_norm is not None and not self.l2_norm > 0:
            raise ValueError("l2_norm must be positive")

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.encoding_map is not None:
            d["encoding_map"] = dict(self.encoding_map)
        if self.l2_norm is not None:
            d["l2_norm"] = self.l2_norm
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnMeta":
        return cls(d["name"], d["kind"], d.get("encoding_map"), d.get("l2_norm"))


@dataclass
class FeatureTable:
    """N rows of D numeric cells plus one class label per row."""

    columns: list
    data: np.ndarray
    labels: np.ndarray
    _meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 2:
            if self.data.size == 0:
                self.data = self.data.reshape(0, len(self.columns))
            else:
                raise ShapeError("table data must be 2-D")
        if self.data.shape[1] != len(self.columns):
            raise ShapeError(f"{self.data.shape[1]} cells per row but {len(self.columns)} columns")
        if self.labels.shape != (self.data.shape[0],):
            raise ShapeError("labels must have one entry per row")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= N_CLASSES):
            raise DataError("label outside the five traffic classes")

    def __len__(self):
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list:
        return [c.name for c in self.columns]

    @property
    def discrete_mask(self) -> np.ndarray:
        return np.array([c.is_discrete for c in self.columns], dtype=bool)

    def take(self, index) -> "FeatureTable":
        index = np.asarray(index)
        return FeatureTable(list(self.columns), self.data[index], self.labels[index])

    def with_data(self, data, labels=None) -> "FeatureTable":
        return FeatureTable(list(self.columns), data, self.labels if labels is None else labels)

    @staticmethod
    def concat(tables: Sequence["FeatureTable"]) -> "FeatureTable":
        first = tables[0]
        for t in tables[1:]:
            if t.names != first.names:
                raise ShapeError("cannot concatenate tables with different columns")
        return FeatureTable(list(first.columns),
                            np.concatenate([t.data for t in tables], axis=0),
                            np.concatenate([t.labels for t in tables]))


def fit_encodings(records: Sequence[RawRecord]) -> dict:
    """Label-encoding maps for the symbolic columns, fitted on ``records``."""
    maps = {}
    for j, name in enumerate(FEATURES):
        if name in SYMBOLIC:
            maps[name] = fit_label_encoding(r.features[j] for r in records)
    return maps


def build_table(records: Sequence[RawRecord], encodings: Optional[dict] = None,
                attack_map: Optional[AttackMap] = None) -> FeatureTable:
    """Encode parsed records. Encodings are fitted on ``records`` when not given."""
    if encodings is None:
        encodings = fit_encodings(records)
    columns = [ColumnMeta(name, DISCRETE, encodings[name]) if name in SYMBOLIC
               else ColumnMeta(name, CONTINUOUS) for name in FEATURES]
    data = np.empty((len(records), len(FEATURES)), dtype=np.float64)
    labels = np.empty(len(records), dtype=np.int64)
    for i, r in enumerate(records):
        for j, (col, cell) in enumerate(zip(columns, r.features)):
            if col.is_discrete:
                data[i, j] = apply_label_encoding(col.encoding_map, cell)
            else:
                try:
                    data[i, j] = float(cell)
                except ValueError:
                    raise ParseError(f"column {col.name!r} value {cell!r} is not numeric",
                                     line=i + 1) from None
        labels[i] = map_attack_label(r.attack_name, attack_map)
    return FeatureTable(columns, data, labels)


def fit_table_norms(table: FeatureTable) -> FeatureTable:
    """Return a copy of the column metadata carrying L2 norms of the continuous columns."""
    cont = ~table.discrete_mask
    norms = fit_l2_norms(table.data[:, cont]) if len(table) else np.ones(cont.sum())
    it = iter(norms.tolist())
    columns = [replace(c, l2_norm=next(it)) if not c.is_discrete else c for c in table.columns]
    return FeatureTable(columns, table.data, table.labels)


def normalize_table(table: FeatureTable, columns: Optional[Sequence[ColumnMeta]] = None) -> FeatureTable:
    """Divide continuous cells by the norms carried in ``columns`` (default: the table's own)."""
    columns = list(columns if columns is not None else table.columns)
    if len(columns) != table.n_features:
        raise ShapeError(f"{len(columns)} fitted columns for a {table.n_features}-column table")
    cont = np.array([not c.is_discrete for c in columns])
    norms = np.array([c.l2_norm for c in columns if not c.is_discrete], dtype=object)
    if any(n is None for n in norms):
        raise InputError("continuous columns have no fitted norm")
    data = table.data.copy()
    data[:, cont] = apply_l2_norms(norms.astype(np.float64), table.data[:, cont])
    return FeatureTable(columns, data, table.labels)


@dataclass(frozen=True)
class ClassDistribution:
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def percentages(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros(N_CLASSES)
        return 100.0 * self.counts / self.total

    def as_dict(self) -> dict:
        return {ClassLabel(i): int(c) for i, c in enumerate(self.counts)}

    def format(self) -> str:
        lines = [f"{'Class':<8}{'Count':>10}{'(%)':>10}"]
        for i, (c, p) in enumerate(zip(self.counts, self.percentages)):
            lines.append(f"{CLASS_NAMES[i]:<8}{int(c):>10}{p:>10.3f}")
        lines.append(f"{'Total':<8}{self.total:>10}")
        return "\n".join(lines)


def class_distribution(table_or_labels) -> ClassDistribution:
    labels = table_or_labels.labels if isinstance(table_or_labels, FeatureTable) else table_or_labels
    labels = np.asarray(labels, dtype=np.int64)
    return ClassDistribution(np.bincount(labels, minlength=N_CLASSES)[:N_CLASSES])


# canonical dataset file: "name:kind" header with "label:label" last, then numeric rows

def write_table(table: FeatureTable, path: os.PathLike) -> None:
    header = ",".join([f"{c.name}:{c.kind}" for c in table.columns] + ["label:label"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row, y in zip(table.data.tolist(), table.labels.tolist()):
            fh.write(",".join(map(repr, row)) + f",{y}\n")


def read_table(path: os.PathLike, columns: Optional[Sequence[ColumnMeta]] = None) -> FeatureTable:
    """Read a canonical dataset file.

    Column metadata (encoding maps, norms) is not part of the file; pass the
    fitted ``columns`` to attach it, otherwise discrete columns get an empty map.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if not header or header[-1] != "label:label":
            raise ParseError("canonical header must end with 'label:label'", line=1)
        names, kinds = zip(*(h.rsplit(":", 1) for h in header[:-1]))
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if columns is None:
        columns = [ColumnMeta(n, k, {} if k == DISCRETE else None) for n, k in zip(names, kinds)]
    elif [c.name for c in columns] != list(names):
        raise ShapeError("fitted columns do not match the file header")
    if rows:
        arr = np.array(rows, dtype=np.float64)
        data, labels = arr[:, :-1], arr[:, -1].astype(np.int64)
    else:
        data, labels = np.zeros((0, len(names))), np.zeros(0, dtype=np.int64)
    return FeatureTable(list(columns), data, labels)
