"""Attack-name to traffic-class mapping.

The mapping is shipped as data (``attack_map.csv``, one ``attack_name,category``
pair per line) so it can be audited and swapped without touching code.
"""
from __future__ import annotations

import os
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping, Optional

from ..errors import ConfigurationError, UnknownLabelError
from .schema import ClassLabel


class AttackMap:
    def __init__(self, table: Mapping[str, ClassLabel]):
        if table.get("normal") is not ClassLabel.NORMAL:
            raise ConfigurationError("attack map must map 'normal' to Normal")
        self._table = MappingProxyType(dict(table))

    @property
    def table(self) -> Mapping[str, ClassLabel]:
        return self._table

    def __call__(self, attack_name: str) -> ClassLabel:
        return map_attack_label(attack_name, self)

    def __len__(self):
        return len(self._table)

    @classmethod
    def from_text(cls, text: str) -> "AttackMap":
        table = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2 or not parts[0]:
                raise ConfigurationError(f"attack map line {lineno}: expected 'attack_name,category'")
            name, category = parts
            try:
                label = ClassLabel.parse(category)
            except ValueError:
                raise ConfigurationError(
                    f"attack map line {lineno}: unknown category {category!r}") from None
            if name in table:
                raise ConfigurationError(f"attack map line {lineno}: duplicate attack {name!r}")
            table[name] = label
        return cls(table)

    @classmethod
    def load(cls, path: Optional[os.PathLike] = None) -> "AttackMap":
        if path is None:
            return default_attack_map()
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        return "".join(f"{k},{v.display}\n" for k, v in self._table.items())


@lru_cache(maxsize=1)
def default_attack_map() -> AttackMap:
    text = resources.files(__package__).joinpath("attack_map.csv").read_text("utf-8")
    return AttackMap.from_text(text)


def map_attack_label(attack_name: str, attack_map: Optional[AttackMap] = None) -> ClassLabel:
    table = (attack_map or default_attack_map()).table
    try:
        return table[attack_name]
    except KeyError:
        raise UnknownLabelError(attack_name) from None
