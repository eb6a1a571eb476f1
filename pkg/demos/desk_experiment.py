"""Run the full arm-by-classifier grid at desk scale on synthetic splits.

Writes synthetic train and test files, a config, and runs the
``experiment`` subcommand into ``demo-out/``.

    python demos/desk_experiment.py [out_dir]
"""
import os
import sys

from idsbalance.data.reference import expected_counts
from idsbalance.data.synthetic import scaled_counts, write_synthetic_split
from idsbalance.runner import cli

CONFIG = """[experiment]
seed = 7
profile = desk

[data]
train = train.txt

[tests]
KDDTest+ = test.txt
KDDTest21- = test21.txt

[classifier.lstm]
epochs = 3

[classifier.cnn]
epochs = 10
"""


def main(out: str = "demo-out") -> int:
    os.makedirs(out, exist_ok=True)
    for name, split, seed in (("train", "KDDTrain+", 1), ("test", "KDDTest+", 2),
                              ("test21", "KDDTest21-", 3)):
        write_synthetic_split(os.path.join(out, f"{name}.txt"),
                              scaled_counts(expected_counts(split), 0.05), seed=seed)
    ini = os.path.join(out, "desk.ini")
    with open(ini, "w") as fh:
        fh.write(CONFIG)
    code = cli.main(["experiment", "--config", ini, "--out", os.path.join(out, "results")])
    with open(os.path.join(out, "results", "tables.txt")) as fh:
        print(fh.read())
    return code


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
