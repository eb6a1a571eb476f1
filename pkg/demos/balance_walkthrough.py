"""Walk through balancing a small synthetic intrusion table.

Builds a skewed table, balances it with random oversampling and with a
small conditional GAN, then compares decision-tree minority recall.

    python demos/balance_walkthrough.py
"""
import logging

import numpy as np

from idsbalance.balance import ctgan_balance, random_oversample
from idsbalance.classifiers import ClassifierSpec, fit_classifier
from idsbalance.ctgan import GanConfig, fit_ctgan
from idsbalance.data import build_table, class_distribution
from idsbalance.data.table import fit_encodings
from idsbalance.data.synthetic import synthetic_records
from idsbalance.eval import confusion, weighted_metrics

TRAIN = {0: 600, 1: 400, 2: 120, 3: 8, 4: 40}
TEST = {0: 150, 1: 100, 2: 30, 3: 20, 4: 40}


def main(seed: int = 0) -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    records = synthetic_records(TRAIN, seed=seed)
    encodings = fit_encodings(records)
    train = build_table(records, encodings)
    test = build_table(synthetic_records(TEST, seed=seed + 1), encodings)
    print("train counts", class_distribution(train).counts.tolist())

    gan = fit_ctgan(train, GanConfig(epochs=20, batch=128, seed=seed))
    arms = {
        "ORG": train,
        "RndOSamp": random_oversample(train, seed=seed),
        "CTGANSamp": ctgan_balance(train, gan, seed=seed),
    }
    for name, table in arms.items():
        model = fit_classifier(ClassifierSpec("dt", {}, seed), table.data, table.labels)
        report = weighted_metrics(confusion(test.labels, model.predict(test.data)))
        print(f"{name:10s} counts {class_distribution(table).counts.tolist()}")
        u2r = next(c for c in report.per_class if c["name"] == "U2R")
        print(f"{'':10s} accuracy {report.accuracy:.4f}  U2R recall {u2r['recall']:.4f}")


if __name__ == "__main__":
    main()
