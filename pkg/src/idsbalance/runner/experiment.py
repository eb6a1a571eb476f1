"""End-to-end ORG / RndOSamp / CTGANSamp experiment grid with per-cell resume."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import ctgan
from ..balance import BalancePlan, apply_plan, preset_targets, write_balanced
from ..classifiers import ClassifierSpec, fit_classifier, save_model
from ..data import build_table, class_distribution, fit_encodings, parse_records
from ..data.schema import CLASS_NAMES, N_CLASSES
from ..data.table import FeatureTable, fit_table_norms, normalize_table
from ..errors import DataError
from ..eval import compare_experiments, confusion, weighted_metrics
from .config import ARM_STRATEGY, ARMS, ExperimentConfig, derive_seed

log = logging.getLogger(__name__)

ARM_PAIRS = (("ORG", "RndOSamp"), ("ORG", "CTGANSamp"), ("RndOSamp", "CTGANSamp"))
METRIC_KEYS = ("accuracy", "precision", "recall", "f1")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stratified_subsample(table: FeatureTable, fraction: float, seed: int) -> FeatureTable:
    """Keep ``round(fraction * count)`` rows of each class (at least one), in original order."""
    if fraction >= 1.0:
        return table
    rng = np.random.default_rng(seed)
    keep = []
    for k in range(N_CLASSES):
        rows = np.flatnonzero(table.labels == k)
        if rows.size:
            n = min(rows.size, max(1, int(round(fraction * rows.size))))
            keep.append(rng.choice(rows, size=n, replace=False))
    return table.take(np.sort(np.concatenate(keep)))


@dataclass
class PreparedData:
    train: FeatureTable  # label-encoded, not normalized; columns carry train L2 norms
    tests: dict  # name -> label-encoded table
    hashes: dict  # dataset name -> sha256

    def features(self, table: FeatureTable, normalize: bool) -> np.ndarray:
        return normalize_table(table, self.train.columns).data if normalize else table.data


def prepare_data(config: ExperimentConfig) -> PreparedData:
    for path in [config.train] + list(config.tests.values()):
        if not os.path.exists(path):
            raise DataError(f"dataset file not found: {path}")
    records = parse_records(config.train)
    encodings = fit_encodings(records)
    train = build_table(records, encodings)
    train = stratified_subsample(train, config.train_fraction, derive_seed(config.seed, "subsample"))
    train = fit_table_norms(train)
    tests = {name: build_table(parse_records(path), encodings)
             for name, path in sorted(config.tests.items())}
    hashes = {"train": file_sha256(config.train)}
    hashes.update({name: file_sha256(p) for name, p in sorted(config.tests.items())})
    return PreparedData(train, tests, hashes)


def _cell_key(config_hash: str, hashes: dict, arm: str, spec: ClassifierSpec) -> str:
    blob = json.dumps([config_hash, hashes, arm, spec.to_dict()], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def _median_index(values) -> int:
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    return order[(len(values) - 1) // 2]


def run_cell(task: dict) -> dict:
    """Train one classifier on one arm (with repeats) and evaluate it on every test set.

    Failures are captured in the returned record rather than raised.
    """
    spec, arm = task["spec"], task["arm"]
    cell = {"arm": arm, "classifier": spec.kind, "status": "ok", "error": None, "results": {}}
    predictions = {}
    t0 = time.perf_counter()
    try:
        runs = []
        for r in range(task["repeats"]):
            seed = spec.seed if r == 0 else derive_seed(spec.seed, f"repeat.{r}")
            rspec = ClassifierSpec(spec.kind, spec.params, seed)
            model = fit_classifier(rspec, task["x"], task["y"])
            path = os.path.join(task["model_dir"], f"{arm}_{spec.kind}_r{r}.model")
            save_model(model, path, extra={"config_hash": task["config_hash"], "arm": arm})
            runs.append({name: model.predict(x) for name, (x, _) in task["tests"].items()})
        for name, (_, y) in task["tests"].items():
            reports = [weighted_metrics(confusion(y, run[name])) for run in runs]
            pick = _median_index([rep.accuracy for rep in reports])
            metrics = reports[pick].to_dict()
            for k in METRIC_KEYS:
                metrics[k] = float(np.median([getattr(rep, k) for rep in reports]))
            cell["results"][name] = {
                "metrics": metrics,
                "confusion": confusion(y, runs[pick][name]).grid.tolist(),
                "repeat_accuracy": [rep.accuracy for rep in reports],
            }
            predictions[name] = runs[pick][name].tolist()
    except Exception as exc:  # a failed cell must not stop the grid
        log.exception("cell %s/%s failed", arm, spec.kind)
        cell.update(status="failed", error=f"{type(exc).__name__}: {exc}", results={})
        predictions = {}
    return {"cell": cell, "predictions": predictions, "seconds": time.perf_counter() - t0}


@dataclass
class ExperimentReport:
    config_hash: str
    datasets: dict
    arms: list
    classifiers: list
    tests: list
    cells: list = field(default_factory=list)
    pvalues: list = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(c["status"] != "ok" for c in self.cells)

    def cell(self, arm: str, kind: str):
        for c in self.cells:
            if c["arm"] == arm and c["classifier"] == kind:
                return c
        return None

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "datasets": self.datasets, "arms": self.arms,
                "classifiers": self.classifiers, "tests": self.tests, "cells": self.cells,
                "pvalues": self.pvalues, "failed_cells": self.failed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["config_hash"], d["datasets"], d["arms"], d["classifiers"], d["tests"],
                   d["cells"], d["pvalues"])

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _arm_tables(config, data, arms, out, config_hash, timings) -> dict:
    """Training table per arm; the GAN is trained once and cached on disk."""
    tables = {}
    counts = class_distribution(data.train).counts
    targets = config.targets if config.targets is not None else preset_targets(counts, config.preset)
    model = None
    if "CTGANSamp" in arms:
        gan_path = os.path.join(out, f"ctgan-{config_hash[:16]}.model")
        t0 = time.perf_counter()
        if os.path.exists(gan_path):
            model = ctgan.load_model(gan_path)
        else:
            model = ctgan.fit_ctgan(data.train, config.gan_config(), max_modes=config.max_modes)
            ctgan.save_model(model, gan_path)
        timings["ctgan"] = time.perf_counter() - t0
    for arm in arms:
        strategy = ARM_STRATEGY[arm]
        if strategy == "none":
            tables[arm] = data.train
            continue
        plan = BalancePlan(strategy, targets, derive_seed(config.seed, f"balance.{arm}"),
                           config.keep_policy)
        t0 = time.perf_counter()
        table = apply_plan(data.train, plan, model)
        timings[f"balance.{arm}"] = time.perf_counter() - t0
        os.makedirs(os.path.join(out, "balanced"), exist_ok=True)
        write_balanced(table, os.path.join(out, "balanced", f"{arm}.csv"), plan, data.train,
                       model.codec_hash if strategy == "ctgan" else None,
                       {"config_hash": config_hash})
        tables[arm] = table
    return tables


def run_experiment(config: ExperimentConfig, data: PreparedData | None = None) -> ExperimentReport:
    """Run (or resume) the configured grid and write the report into ``config.out``."""
    data = data or prepare_data(config)
    out = config.out
    for sub in ("cells", "models"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    config_hash = config.fingerprint()
    timings = {}
    arms = [a for a in ARMS if a in config.arms]
    kinds = [s.kind for s in config.classifiers]
    cell_paths, pending = {}, []
    for arm in arms:
        for spec in config.classifiers:
            key = _cell_key(config_hash, data.hashes, arm, spec)
            cell_paths[(arm, spec.kind)] = os.path.join(out, "cells", f"{key}.json")
            if not os.path.exists(cell_paths[(arm, spec.kind)]):
                pending.append((arm, spec))
    log.info("%d of %d cells to run", len(pending), len(cell_paths))
    if pending:
        need = sorted({arm for arm, _ in pending}, key=ARMS.index)
        tables = _arm_tables(config, data, need, out, config_hash, timings)
        tests = {name: (data.features(t, config.normalize), t.labels)
                 for name, t in data.tests.items()}
        tasks = [{"arm": arm, "spec": spec, "repeats": config.repeats,
                  "x": data.features(tables[arm], config.normalize), "y": tables[arm].labels,
                  "tests": tests, "model_dir": os.path.join(out, "models"),
                  "config_hash": config_hash} for arm, spec in pending]
        if config.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(run_cell, tasks))
        else:
            results = [run_cell(t) for t in tasks]
        for (arm, spec), res in zip(pending, results):
            timings[f"{arm}.{spec.kind}"] = res.pop("seconds")
            res["config_hash"] = config_hash
            with open(cell_paths[(arm, spec.kind)], "w", encoding="utf-8") as fh:
                json.dump(res, fh, sort_keys=True)
    report = ExperimentReport(config_hash, data.hashes, arms, kinds, sorted(data.tests))
    preds = {}
    for arm in arms:
        for kind in kinds:
            with open(cell_paths[(arm, kind)], encoding="utf-8") as fh:
                res = json.load(fh)
            report.cells.append(res["cell"])
            preds[(arm, kind)] = res["predictions"]
    for kind in kinds:
        for name in report.tests:
            y = data.tests[name].labels
            for a, b in ARM_PAIRS:
                if a not in arms or b not in arms:
                    continue
                pa, pb = preds[(a, kind)].get(name), preds[(b, kind)].get(name)
                p = None
                if pa is not None and pb is not None:
                    p = compare_experiments(np.asarray(pa) == y, np.asarray(pb) == y)
                report.pvalues.append({"classifier": kind, "test": name, "pair": [a, b], "p": p})
    write_outputs(report, out)
    if timings:
        with open(os.path.join(out, "timings.json"), "w", encoding="utf-8") as fh:
            json.dump(timings, fh, sort_keys=True, indent=1)
    return report


def write_outputs(report: ExperimentReport, out: str) -> None:
    from .render import metrics_csv, render_tables

    with open(os.path.join(out, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out, "tables.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_tables(report))
    with open(os.path.join(out, "metrics.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metrics_csv(report))
    cdir = os.path.join(out, "confusion")
    os.makedirs(cdir, exist_ok=True)
    for c in report.cells:
        for name, res in c["results"].items():
            path = os.path.join(cdir, f"{c['arm']}_{c['classifier']}_{name}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("true\\pred," + ",".join(CLASS_NAMES) + "\n")
                for cls, row in zip(CLASS_NAMES, res["confusion"]):
                    fh.write(cls + "," + ",".join(map(str, row)) + "\n")


def export_predictions(model, table: FeatureTable, path, features=None) -> None:
    """Per-sample CSV: true label, predicted label, then one score column per class."""
    x = table.data if features is None else features
    pred = model.predict(x)
    scores = model.predict_scores(x)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("true,pred," + ",".join(CLASS_NAMES) + "\n")
        for t, p, s in zip(table.labels.tolist(), pred.tolist(), scores.tolist()):
            fh.write(f"{CLASS_NAMES[t]},{CLASS_NAMES[p]}," + ",".join(map(repr, s)) + "\n")
