"""Shared fit/predict contract, hyperparameter specs and model persistence."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .. import ndiff
from ..data.schema import N_CLASSES
from ..errors import ConfigurationError, InputError, ShapeError

KINDS = ("dt", "rf", "nb", "svm", "fnn", "lstm", "cnn")

_NEURAL = {"epochs": 100, "batch": 128, "lr": 1e-3, "patience": 10, "holdout": 0.1}
DEFAULTS = {
    "dt": {"max_depth": None, "min_samples_split": 2},
    "rf": {"trees": 100, "max_depth": None, "min_samples_split": 2, "bootstrap": True,
           "max_features": "sqrt"},
    "nb": {"alpha": 1.0},
    "svm": {"C": 1.0, "epochs": 50, "lr": 1e-3, "batch": 128},
    "fnn": dict(_NEURAL),
    "lstm": dict(_NEURAL),
    "cnn": dict(_NEURAL),
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: Mapping = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown classifier kind {self.kind!r}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ConfigurationError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        for k, v in self.params.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v < 0:
                raise ConfigurationError(f"{self.kind}: {k} must be non-negative")
        object.__setattr__(self, "params", dict(self.params))

    def resolved(self) -> dict:
        return {**DEFAULTS[self.kind], **self.params}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(sorted(self.params.items())), "seed": self.seed}


def as_features(x, n_features=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(0, n_features or 0)
    if x.ndim != 2:
        raise ShapeError(f"features must be a 2-D array, got shape {x.shape}")
    if n_features is not None and x.shape[1] != n_features:
        raise ShapeError(f"model expects {n_features} features, got {x.shape[1]}")
    return x


def as_labels(y, n) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size != n:
        raise ShapeError(f"{y.size} labels for {n} rows")
    if y.size and (y.min() < 0 or y.max() >= N_CLASSES):
        raise InputError("labels must be class indices 0..4")
    return y


class Classifier:
    """Base class. Scores always have one column per traffic class."""

    kind = ""

    def __init__(self, spec: ClassifierSpec):
        self.spec = spec
        self.params = spec.resolved()
        self.classes_ = None
        self.n_features = None

    # subclasses implement _fit(x, y) and _scores(x)
    def fit(self, x, y) -> "Classifier":
        x = as_features(x)
        y = as_labels(y, x.shape[0])
        if x.shape[0] == 0:
            raise InputError("cannot fit on zero rows")
        if not np.isfinite(x).all():
            raise InputError("features contain non-finite values")
        self.n_features = x.shape[1]
        self.classes_ = np.unique(y)
        self._fit(x, y)
        return self

    @property
    def seen_mask(self) -> np.ndarray:
        m = np.zeros(N_CLASSES, dtype=bool)
        m[self.classes_] = True
        return m

    def predict_scores(self, x) -> np.ndarray:
        x = as_features(x, self.n_features)
        if x.shape[0] == 0:
            return np.zeros((0, N_CLASSES))
        return self._scores(x)

    def predict(self, x) -> np.ndarray:
        scores = self.predict_scores(x)
        return np.argmax(scores, axis=1).astype(np.int64)  # lowest class index wins ties

    # persistence: arrays plus a JSON-able header
    def get_state(self) -> tuple:
        raise NotImplementedError

    def set_state(self, tensors: dict, header: dict) -> None:
        raise NotImplementedError


def _registry() -> dict:
    from .bayes import MultinomialNB
    from .neural import NeuralClassifier
    from .svm import LinearSVM
    from .tree import DecisionTree, RandomForest

    return {"dt": DecisionTree, "rf": RandomForest, "nb": MultinomialNB, "svm": LinearSVM,
            "fnn": NeuralClassifier, "lstm": NeuralClassifier, "cnn": NeuralClassifier}


def make_classifier(spec: ClassifierSpec) -> Classifier:
    return _registry()[spec.kind](spec)


def fit_classifier(spec: ClassifierSpec, x, y) -> Classifier:
    return make_classifier(spec).fit(x, y)


def model_to_bytes(model: Classifier, extra: Optional[dict] = None) -> bytes:
    tensors, header = model.get_state()
    header = {"kind": model.kind, "spec": model.spec.to_dict(),
              "classes": model.classes_.tolist(), "n_features": model.n_features, "state": header,
              "extra": extra or {}}
    return ndiff.checkpoint.dumps(tensors, header)


def model_from_bytes(buf: bytes) -> Classifier:
    tensors, header = ndiff.checkpoint.loads(buf)
    s = header["spec"]
    spec = ClassifierSpec(s["kind"], s["params"], s["seed"])
    model = make_classifier(spec)
    model.classes_ = np.asarray(header["classes"], dtype=np.int64)
    model.n_features = header["n_features"]
    model.set_state(tensors, header["state"])
    return model


def save_model(model: Classifier, path, extra: Optional[dict] = None) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model, extra))


def load_model(path) -> Classifier:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
