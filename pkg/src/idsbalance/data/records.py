"""Reading and writing NSL-KDD text records."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterable, TextIO, Union

from ..errors import EmptyDatasetError, ParseError
from .schema import N_FEATURES, N_FIELDS


@dataclass(frozen=True)
class RawRecord:
    features: tuple
    attack_name: str
    difficulty: int

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.features)}")
        if not self.attack_name:
            raise ValueError("attack_name must be non-empty")


Source = Union[bytes, str, os.PathLike, BinaryIO, TextIO]


def _lines(source) -> Iterable[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8")).read().split("\n")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return fh.read().split("\n")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.split("\n")


def parse_records(source: Source) -> list[RawRecord]:
    """Parse comma-separated NSL-KDD text, one record per line.

    ``source`` may be raw bytes, a path, or an open (binary or text) stream.
    Blank lines are skipped; line numbers in errors are 1-based and count
    blank lines too.
    """
    records = []
    for lineno, line in enumerate(_lines(source), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != N_FIELDS:
            raise ParseError(f"expected {N_FIELDS} fields, found {len(fields)}", line=lineno)
        attack = fields[N_FEATURES].strip()
        if not attack:
            raise ParseError("empty attack name", line=lineno)
        try:
            difficulty = int(fields[N_FEATURES + 1])
        except ValueError:
            raise ParseError(f"difficulty {fields[N_FEATURES + 1]!r} is not an integer",
                             line=lineno) from None
        records.append(RawRecord(tuple(fields[:N_FEATURES]), attack, difficulty))
    if not records:
        raise EmptyDatasetError("input contains no records")
    return records


def serialize_records(records: Iterable[RawRecord]) -> bytes:
    out = []
    for r in records:
        out.append(",".join((*r.features, r.attack_name, str(r.difficulty))))
    return ("\n".join(out) + "\n").encode("utf-8")
