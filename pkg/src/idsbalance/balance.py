"""Class balancing: random oversampling and GAN synthesis to per-class targets."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .data.reference import PAPER_CTGAN_TARGETS
from .data.schema import CLASS_NAMES, N_CLASSES, ClassLabel
from .data.table import FeatureTable, class_distribution, write_table
from .errors import ConfigurationError, PlanError

log = logging.getLogger(__name__)

STRATEGIES = ("none", "random_oversample", "ctgan")
PRESETS = ("equalize", "paper")
KEEP_POLICIES = ("retain", "discard")


@dataclass(frozen=True)
class BalancePlan:
    strategy: str = "none"
    targets: Optional[Mapping[int, int]] = None
    seed: int = 0
    keep_policy: str = "retain"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown balancing strategy {self.strategy!r}")
        if self.keep_policy not in KEEP_POLICIES:
            raise ConfigurationError(f"unknown keep policy {self.keep_policy!r}")
        if self.strategy == "none" and self.targets:
            raise PlanError("strategy 'none' takes no targets")
        if self.targets is not None:
            clean = {int(ClassLabel(int(k))): int(v) for k, v in self.targets.items()}
            if any(v < 0 for v in clean.values()):
                raise PlanError("class targets must be non-negative")
            object.__setattr__(self, "targets", clean)

    def to_dict(self) -> dict:
        targets = None if self.targets is None else {
            CLASS_NAMES[k]: v for k, v in sorted(self.targets.items())}
        return {"strategy": self.strategy, "targets": targets, "seed": self.seed,
                "keep_policy": self.keep_policy}


def preset_targets(counts, preset: str = "equalize") -> dict:
    """Per-class targets from current ``counts`` (indexed by class).

    ``equalize`` lifts every present class to the majority count; ``paper``
    uses the fixed attack-class counts of the published GAN-balanced set and
    leaves Normal as it is.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if preset == "equalize":
        top = int(counts.max()) if counts.size else 0
        return {i: top for i in range(counts.size) if counts[i] > 0}
    if preset == "paper":
        targets = {int(k): v for k, v in PAPER_CTGAN_TARGETS.items()}
        targets[int(ClassLabel.NORMAL)] = int(counts[ClassLabel.NORMAL])
        return targets
    raise ConfigurationError(f"unknown target preset {preset!r}")


def _resolve(table: FeatureTable, targets, keep_policy: str) -> tuple:
    counts = class_distribution(table).counts
    if targets is None:
        targets = preset_targets(counts, "equalize")
    targets = {int(k): int(v) for k, v in targets.items()}
    for k, t in targets.items():
        if t < counts[k] and keep_policy == "retain":
            raise PlanError(f"target {t} for {CLASS_NAMES[k]} is below its current count "
                            f"{counts[k]}; use keep_policy='discard' to drop rows")
    return counts, targets


def _class_rng(seed: int, k: int):
    return np.random.default_rng([int(seed), 7919, int(k)])


def _discard(table: FeatureTable, counts, targets, seed: int) -> FeatureTable:
    keep = []
    for k in range(N_CLASSES):
        rows = np.flatnonzero(table.labels == k)
        t = targets.get(k, counts[k])
        if t < rows.size:
            rows = np.sort(_class_rng(seed, k + 100).choice(rows, size=t, replace=False))
        keep.append(rows)
    return table.take(np.sort(np.concatenate(keep)))


def random_oversample(table: FeatureTable, targets: Optional[Mapping] = None, seed: int = 0,
                      keep_policy: str = "retain") -> FeatureTable:
    """Duplicate rows drawn uniformly with replacement until each class meets its target.

    Originals come first, then the duplicates of each class in class order.
    """
    counts, targets = _resolve(table, targets, keep_policy)
    if keep_policy == "discard":
        table = _discard(table, counts, targets, seed)
        counts = class_distribution(table).counts
    extra = []
    for k in sorted(targets):
        need = targets[k] - int(counts[k])
        if need <= 0:
            continue
        rows = np.flatnonzero(table.labels == k)
        if rows.size == 0:
            raise PlanError(f"cannot oversample {CLASS_NAMES[k]}: no rows to copy")
        extra.append(rows[_class_rng(seed, k).integers(rows.size, size=need)])
    if not extra:
        return table.take(np.arange(len(table)))
    return table.take(np.concatenate([np.arange(len(table))] + extra))


def ctgan_balance(table: FeatureTable, model, targets: Optional[Mapping] = None, seed: int = 0,
                  keep_policy: str = "retain") -> FeatureTable:
    """Append label-conditioned synthetic rows until each class meets its target.

    Each class uses its own RNG stream derived from ``seed``, so classes can
    be generated in any order (or concurrently) with identical results.
    """
    from .ctgan.model import LABEL_COLUMN, generate

    counts, targets = _resolve(table, targets, keep_policy)
    if keep_policy == "discard":
        table = _discard(table, counts, targets, seed)
        counts = class_distribution(table).counts
    parts = [table]
    for k in sorted(targets):
        need = targets[k] - int(counts[k])
        if need <= 0:
            continue
        synth = generate(model, need, _class_rng(seed, k), condition=(LABEL_COLUMN, k))
        parts.append(FeatureTable(list(table.columns), synth.data, synth.labels))
        log.info("generated %d synthetic %s rows", need, CLASS_NAMES[k])
    return FeatureTable.concat(parts)


def apply_plan(table: FeatureTable, plan: BalancePlan, model=None) -> FeatureTable:
    if plan.strategy == "none":
        return table
    if plan.strategy == "random_oversample":
        return random_oversample(table, plan.targets, plan.seed, plan.keep_policy)
    if model is None:
        raise ConfigurationError("the ctgan strategy needs a trained model")
    return ctgan_balance(table, model, plan.targets, plan.seed, plan.keep_policy)


@dataclass
class Manifest:
    plan: dict
    counts_before: list
    counts_after: list
    model_hash: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"plan": self.plan, "counts_before": self.counts_before,
                           "counts_after": self.counts_after, "model_hash": self.model_hash,
                           **self.extra}, sort_keys=True, indent=2) + "\n"


def write_balanced(table: FeatureTable, path, plan: BalancePlan, before: FeatureTable,
                   model_hash: Optional[str] = None, extra: Optional[dict] = None) -> str:
    """Write ``table`` in canonical form plus a ``<path>.manifest.json`` sidecar."""
    write_table(table, path)
    manifest = Manifest(plan.to_dict(), class_distribution(before).counts.tolist(),
                        class_distribution(table).counts.tolist(), model_hash, extra or {})
    side = os.fspath(path) + ".manifest.json"
    with open(side, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())
    return side
