"""The seven benchmark classifiers behind one fit/predict contract."""
from .base import (DEFAULTS, KINDS, Classifier, ClassifierSpec, fit_classifier, load_model,
                   make_classifier, model_from_bytes, model_to_bytes, save_model)
from .bayes import MultinomialNB
from .neural import NeuralClassifier, architecture, build_network
from .svm import LinearSVM, hinge_objective
from .tree import DecisionTree, RandomForest, Tree, gini_impurity

__all__ = ["DEFAULTS", "KINDS", "Classifier", "ClassifierSpec", "fit_classifier", "load_model",
           "make_classifier", "model_from_bytes", "model_to_bytes", "save_model",
           "MultinomialNB", "NeuralClassifier", "architecture", "build_network", "LinearSVM",
           "hinge_objective", "DecisionTree", "RandomForest", "Tree", "gini_impurity"]
