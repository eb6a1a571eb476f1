"""``idsbalance`` command line.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 some cells failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .. import classifiers, ctgan
from ..balance import BalancePlan, apply_plan, preset_targets, write_balanced
from ..data import ColumnMeta, build_table, class_distribution, fit_encodings, parse_records
from ..data.schema import ClassLabel
from ..data.table import FeatureTable, fit_table_norms, normalize_table, read_table, write_table
from ..errors import ConfigurationError, DataError, IdsBalanceError, PlanError
from ..eval import confusion, weighted_metrics
from .config import PROFILES, derive_seed, load_config, reseed
from .experiment import ExperimentReport, export_predictions, run_experiment
from .render import render_tables

log = logging.getLogger("idsbalance")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _columns_path(table_path: str) -> str:
    return table_path + ".columns.json"


def _write_columns(columns, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump([c.to_dict() for c in columns], fh, sort_keys=True, indent=1)


def _load_table(path: str, columns_path: str | None = None) -> FeatureTable:
    columns_path = columns_path or _columns_path(path)
    columns = None
    if os.path.exists(columns_path):
        with open(columns_path, encoding="utf-8") as fh:
            columns = [ColumnMeta.from_dict(d) for d in json.load(fh)]
    return read_table(path, columns)


def _features(table: FeatureTable, normalize: bool) -> np.ndarray:
    return normalize_table(table).data if normalize else table.data


def _out_path(args, default_name: str) -> str:
    if getattr(args, "output", None):
        return args.output
    os.makedirs(args.out or ".", exist_ok=True)
    return os.path.join(args.out or ".", default_name)


def _config(args):
    cfg = load_config(args.config) if args.config else None
    if cfg is not None:
        if args.seed is not None:
            cfg = reseed(cfg, args.seed)
        cfg = cfg.with_overrides(out=args.out, profile=args.profile, workers=args.workers,
                                 repeats=args.repeats)
    return cfg


def _seed(args, cfg) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.seed if cfg is not None else 0


# -- subcommands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    records = parse_records(args.input)
    if args.encodings_from:
        reference = parse_records(args.encodings_from)
        encodings = fit_encodings(reference)
        fitted = fit_table_norms(build_table(reference, encodings)).columns
    else:
        encodings = fit_encodings(records)
        fitted = None
    table = build_table(records, encodings)
    columns = fitted if fitted is not None else fit_table_norms(table).columns
    out = _out_path(args, os.path.splitext(os.path.basename(args.input))[0] + ".csv")
    write_table(table, out)
    _write_columns(columns, _columns_path(out))
    print(class_distribution(table).format())
    print(f"wrote {out}")
    return EXIT_OK


def cmd_fit_codecs(args) -> int:
    cfg = _config(args)
    table = _load_table(args.input)
    max_modes = args.max_modes or (cfg.max_modes if cfg else 10)
    codecs = ctgan.fit_table_codecs(table, max_modes, _seed(args, cfg))
    out = _out_path(args, "codecs.json")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"codecs": [c.to_dict() for c in codecs], "hash": ctgan.codecs_hash(codecs)},
                  fh, sort_keys=True, indent=1)
    print(f"wrote {out}")
    return EXIT_OK


def _gan_config(args, cfg):
    if cfg is not None:
        gc = cfg.gan_config()
        max_modes = cfg.max_modes
    else:
        gc = ctgan.GanConfig(epochs=PROFILES[args.profile or "desk"]["ctgan_epochs"])
        max_modes = 10
    kw = {"seed": derive_seed(_seed(args, cfg), "ctgan")}
    if args.epochs is not None:
        kw["epochs"] = args.epochs
    from dataclasses import replace
    return replace(gc, **kw), max_modes


def cmd_train_ctgan(args) -> int:
    cfg = _config(args)
    table = _load_table(args.input)
    gc, max_modes = _gan_config(args, cfg)
    codecs = None
    if args.codecs:
        with open(args.codecs, encoding="utf-8") as fh:
            codecs = [ctgan.ColumnCodec.from_dict(d) for d in json.load(fh)["codecs"]]
    model = ctgan.fit_ctgan(table, gc, codecs=codecs, max_modes=max_modes)
    out = _out_path(args, "ctgan.model")
    ctgan.save_model(model, out)
    print(f"wrote {out} (codec hash {model.codec_hash[:12]})")
    return EXIT_OK


def cmd_generate(args) -> int:
    model = ctgan.load_model(args.model)
    rng = np.random.default_rng(derive_seed(_seed(args, None), "generate"))
    condition = None
    if args.label:
        condition = (ctgan.LABEL_COLUMN, int(ClassLabel.parse(args.label)))
    table = ctgan.generate(model, args.n, rng, condition=condition)
    out = _out_path(args, "generated.csv")
    write_table(table, out)
    print(class_distribution(table).format())
    return EXIT_OK


def cmd_balance(args) -> int:
    cfg = _config(args)
    table = _load_table(args.input)
    model = ctgan.load_model(args.model) if args.model else None
    preset = args.preset or (cfg.preset if cfg else "equalize")
    targets = preset_targets(class_distribution(table).counts, preset)
    plan = BalancePlan(args.strategy, targets, derive_seed(_seed(args, cfg), f"balance.{args.strategy}"),
                       args.keep_policy)
    balanced = apply_plan(table, plan, model)
    out = _out_path(args, "balanced.csv")
    write_balanced(balanced, out, plan, table, model.codec_hash if model else None)
    src = _columns_path(args.input)
    if os.path.exists(src):
        with open(src, encoding="utf-8") as fh, open(_columns_path(out), "w", encoding="utf-8") as dst:
            dst.write(fh.read())
    print(class_distribution(balanced).format())
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    table = _load_table(args.input, args.columns)
    params = {}
    if cfg is not None:
        for s in cfg.classifiers:
            if s.kind == args.kind:
                params = dict(s.params)
    spec = classifiers.ClassifierSpec(args.kind, params,
                                      derive_seed(_seed(args, cfg), f"classifier.{args.kind}"))
    model = classifiers.fit_classifier(spec, _features(table, args.normalize), table.labels)
    out = _out_path(args, f"{args.kind}.model")
    classifiers.save_model(model, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = classifiers.load_model(args.model)
    table = _load_table(args.input, args.columns)
    cm = confusion(table.labels, model.predict(_features(table, args.normalize)))
    report = weighted_metrics(cm)
    print(report.to_text(), end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        with open(os.path.join(args.out, "confusion.csv"), "w", encoding="utf-8") as fh:
            fh.write(cm.to_csv())
    return EXIT_OK


def cmd_experiment(args) -> int:
    if not args.config:
        raise ConfigurationError("experiment needs --config")
    cfg = _config(args)
    report = run_experiment(cfg)
    print(render_tables(report), end="")
    print(f"report: {os.path.join(cfg.out, 'report.json')}")
    return EXIT_PARTIAL if report.failed else EXIT_OK


def cmd_report(args) -> int:
    path = args.report or os.path.join(args.out or ".", "report.json")
    report = ExperimentReport.load(path)
    print(render_tables(report), end="")
    return EXIT_PARTIAL if report.failed else EXIT_OK


def cmd_export_predictions(args) -> int:
    model = classifiers.load_model(args.model)
    table = _load_table(args.input, args.columns)
    out = _out_path(args, "predictions.csv")
    export_predictions(model, table, out, _features(table, args.normalize))
    print(f"wrote {out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment configuration")
    common.add_argument("--seed", type=int, help="global seed (u64)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--profile", choices=sorted(PROFILES), help="desk or full scale")
    common.add_argument("--workers", type=int, help="concurrent grid cells")
    common.add_argument("--repeats", type=int, help="training repeats per cell (median)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="idsbalance", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "parse raw NSL-KDD text into a canonical table")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--encodings-from", help="raw training split supplying encodings and norms")

    p = add("fit-codecs", cmd_fit_codecs, "fit per-column GAN codecs")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--max-modes", type=int)

    p = add("train-ctgan", cmd_train_ctgan, "train the conditional GAN")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--codecs")
    p.add_argument("--epochs", type=int)

    p = add("generate", cmd_generate, "sample synthetic rows from a trained GAN")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--label", help="class name to condition on")
    p.add_argument("--output")

    p = add("balance", cmd_balance, "balance a table to per-class targets")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", choices=("random_oversample", "ctgan"), required=True)
    p.add_argument("--model", help="trained GAN (ctgan strategy)")
    p.add_argument("--preset", choices=("equalize", "paper"))
    p.add_argument("--keep-policy", choices=("retain", "discard"), default="retain")
    p.add_argument("--output")

    for name, func, help_ in (("train", cmd_train, "fit one classifier"),
                              ("evaluate", cmd_evaluate, "score a classifier on a table"),
                              ("export-predictions", cmd_export_predictions,
                               "write per-sample predictions and scores")):
        p = add(name, func, help_)
        p.add_argument("--input", required=True)
        p.add_argument("--columns", help="column metadata JSON (default: <input>.columns.json)")
        p.add_argument("--normalize", action="store_true", help="divide by the stored L2 norms")
        if name == "train":
            p.add_argument("--kind", choices=classifiers.KINDS, required=True)
        else:
            p.add_argument("--model", required=True)
        if name != "evaluate":
            p.add_argument("--output")

    add("experiment", cmd_experiment, "run the ORG / RndOSamp / CTGANSamp grid")
    p = add("report", cmd_report, "render the tables of a finished experiment")
    p.add_argument("--report", help="report.json (default: <out>/report.json)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, PlanError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, IdsBalanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
