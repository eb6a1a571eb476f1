"""Fixed-width text tables and CSV exports of an experiment report."""
from __future__ import annotations

import csv
import io

from .config import ARMS
from .experiment import ARM_PAIRS, METRIC_KEYS, ExperimentReport

FAILED = "\u2014"  # marker for a failed or missing cell
_SHORT = {"accuracy": "Acc", "precision": "Pre", "recall": "Rec", "f1": "F1"}


def format_metric(v) -> str:
    return FAILED if v is None else f"{v:.4f}"


def format_p(p) -> str:
    return FAILED if p is None else f"{p:.2e}"


def _table(header: list, rows: list) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(str(v).rjust(w) if i else str(v).ljust(w)  # noqa: E731
                               for i, (v, w) in enumerate(zip(r, widths)))
    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def render_tables(report: ExperimentReport) -> str:
    """One metrics table per test set, then one p-value table per test set."""
    arms = [a for a in ARMS if a in report.arms] or list(ARMS)
    parts = []
    tests = report.tests or ["(no test sets)"]
    for name in tests:
        header = ["Classifier"] + [f"{arm}:{_SHORT[k]}" for arm in arms for k in METRIC_KEYS]
        rows = []
        for kind in report.classifiers:
            row = [kind.upper()]
            for arm in arms:
                cell = report.cell(arm, kind)
                res = cell["results"].get(name) if cell and cell["status"] == "ok" else None
                row += [format_metric(res["metrics"][k] if res else None) for k in METRIC_KEYS]
            rows.append(row)
        parts.append(f"Performance on {name}\n" + _table(header, rows))
    for name in tests:
        header = ["Arms"] + [k.upper() for k in report.classifiers]
        rows = []
        for a, b in ARM_PAIRS:
            if a not in arms or b not in arms:
                continue
            row = [f"{a}, {b}"]
            for kind in report.classifiers:
                hit = [p["p"] for p in report.pvalues
                       if p["classifier"] == kind and p["test"] == name and p["pair"] == [a, b]]
                row.append(format_p(hit[0] if hit else None))
            rows.append(row)
        parts.append(f"t-test p-values on {name}\n" + _table(header, rows))
    return "\n".join(parts)


def metrics_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "arm", "classifier", "status"] + list(METRIC_KEYS))
    for name in report.tests:
        for c in report.cells:
            res = c["results"].get(name)
            vals = [repr(res["metrics"][k]) for k in METRIC_KEYS] if res else [""] * 4
            w.writerow([name, c["arm"], c["classifier"], c["status"]] + vals)
    return buf.getvalue()
