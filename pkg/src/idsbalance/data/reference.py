"""Published NSL-KDD class distribution, used to validate ingestion."""
from __future__ import annotations

from .schema import ClassLabel

# class -> (count, percentage cell as printed)
PUBLISHED_COUNTS = {
    "KDDTrain+": {
        ClassLabel.NORMAL: (67343, "53.5"),
        ClassLabel.DOS: (45927, "36.4"),
        ClassLabel.PROBE: (11656, "9.3"),
        ClassLabel.U2R: (52, "0.041"),
        ClassLabel.R2L: (995, "0.78"),
    },
    "KDDTest+": {
        ClassLabel.NORMAL: (9711, "43.1"),
        ClassLabel.DOS: (7458, "33.1"),
        ClassLabel.PROBE: (2421, "10.7"),
        ClassLabel.U2R: (67, "0.3"),
        ClassLabel.R2L: (2887, "12.8"),
    },
    "KDDTest21-": {
        ClassLabel.NORMAL: (13449, "53.3"),
        ClassLabel.DOS: (9234, "36.7"),
        ClassLabel.PROBE: (2289, "9.1"),
        ClassLabel.U2R: (11, "0.04"),
        ClassLabel.R2L: (209, "0.83"),
    },
}

# file names of the public release, keyed by the split names above
SPLIT_FILES = {
    "KDDTrain+": "KDDTrain+.txt",
    "KDDTest+": "KDDTest+.txt",
    "KDDTest21-": "KDDTest-21.txt",
}

# per-class targets of the GAN-balanced training set; Normal is left as is
PAPER_CTGAN_TARGETS = {
    ClassLabel.PROBE: 41149,
    ClassLabel.DOS: 102589,
    ClassLabel.U2R: 39483,
    ClassLabel.R2L: 55350,
}


def expected_counts(split: str) -> dict:
    return {label: cell[0] for label, cell in PUBLISHED_COUNTS[split].items()}


# published accuracies: test set -> arm -> classifier
PUBLISHED_ACCURACY = {
    "KDDTest+": {
        "ORG": {"dt": 0.7315, "svm": 0.7014, "rf": 0.7393, "nb": 0.6105, "fnn": 0.7534,
                "lstm": 0.7629, "cnn": 0.7505},
        "RndOSamp": {"dt": 0.7458, "svm": 0.6935, "rf": 0.7355, "nb": 0.4483, "fnn": 0.7587,
                     "lstm": 0.7498, "cnn": 0.7517},
        "CTGANSamp": {"dt": 0.7522, "svm": 0.7326, "rf": 0.7394, "nb": 0.6273, "fnn": 0.7736,
                      "lstm": 0.7762, "cnn": 0.7717},
    },
    "KDDTest21-": {
        "ORG": {"dt": 0.4917, "svm": 0.4349, "rf": 0.5036, "nb": 0.2659, "fnn": 0.5344,
                "lstm": 0.5535, "cnn": 0.5289},
        "RndOSamp": {"dt": 0.5248, "svm": 0.4823, "rf": 0.4963, "nb": 0.2772, "fnn": 0.5464,
                     "lstm": 0.5279, "cnn": 0.5315},
        "CTGANSamp": {"dt": 0.5423, "svm": 0.4993, "rf": 0.5043, "nb": 0.3503, "fnn": 0.5719,
                      "lstm": 0.5774, "cnn": 0.5661},
    },
}
