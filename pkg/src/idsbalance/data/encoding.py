"""Label encoding of symbolic columns and column-wise L2 normalization."""
from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from ..errors import InputError, InvalidValueError, ShapeError

UNSEEN_CODE = 0


def fit_label_encoding(values: Iterable[str]) -> dict[str, int]:
    """Assign codes 1..K to the distinct values in alphabetical order."""
    distinct = sorted(set(values))
    if not distinct:
        raise InputError("cannot fit a label encoding on an empty column")
    return {v: i for i, v in enumerate(distinct, start=1)}


def apply_label_encoding(mapping: Mapping[str, int], value: str) -> int:
    return mapping.get(value, UNSEEN_CODE)


def decode_label(mapping: Mapping[str, int], code: int) -> str:
    for k, v in mapping.items():
        if v == code:
            return k
    raise KeyError(code)


def fit_l2_norms(values: np.ndarray) -> np.ndarray:
    """Column L2 norms of a 2-D array; all-zero columns get the sentinel 1."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {values.shape}")
    if values.shape[0] < 1:
        raise InputError("cannot fit norms on zero rows")
    bad = ~np.isfinite(values)
    if bad.any():
        r, c = map(int, np.argwhere(bad)[0])
        raise InvalidValueError(f"non-finite value at row {r}, column {c}", row=r, column=c)
    norms = np.sqrt(np.einsum("ij,ij->j", values, values))
    norms[norms == 0] = 1.0
    return norms


def apply_l2_norms(norms: np.ndarray, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != norms.shape[0]:
        raise ShapeError(f"{norms.shape[0]} norms do not match table shape {values.shape}")
    return values / norms
