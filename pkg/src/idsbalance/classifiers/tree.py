"""Gini decision trees and bagged random forests."""
from __future__ import annotations

import numpy as np

from ..data.schema import N_CLASSES
from ..errors import InputError
from .base import Classifier

# score differences below this are ties (then the lower feature index wins)
_TIE = 1e-12


def gini_impurity(counts) -> float:
    """``1 - sum p_l^2`` of a vector of class counts."""
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if (c < 0).any() or total <= 0:
        raise InputError("class counts must be non-negative and not all zero")
    p = c / total
    return float(1.0 - np.dot(p, p))


def _best_split_on(xcol, y_onehot, total):
    """Best midpoint split of one feature.

    Returns ``(score, threshold)`` where score = sum_children ||counts||^2 / n_child
    (larger is better; equivalent to smallest weighted child Gini), or None.
    """
    order = np.argsort(xcol, kind="stable")
    xs = xcol[order]
    valid = xs[1:] != xs[:-1]
    if not valid.any():
        return None
    left = np.cumsum(y_onehot[order], axis=0)[:-1]
    n = xs.size
    nl = np.arange(1, n, dtype=np.float64)
    right = total[None, :] - left
    score = (left * left).sum(axis=1) / nl + (right * right).sum(axis=1) / (n - nl)
    score = np.where(valid, score, -np.inf)
    i = int(np.argmax(score))
    return score[i], 0.5 * (xs[i] + xs[i + 1])


class _TreeBuilder:
    def __init__(self, max_depth, min_samples_split, max_features, rng):
        self.max_depth = max_depth
        self.min_samples_split = max(2, int(min_samples_split))
        self.max_features = max_features
        self.rng = rng
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def _new(self, counts):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(counts)
        return len(self.feature) - 1

    def build(self, x, y):
        onehot = np.eye(N_CLASSES)[y]
        root = self._new(onehot.sum(axis=0))
        stack = [(root, np.arange(x.shape[0]), 0)]
        while stack:
            node, rows, depth = stack.pop()
            counts = self.value[node]
            if (np.count_nonzero(counts) <= 1 or rows.size < self.min_samples_split
                    or (self.max_depth is not None and depth >= self.max_depth)):
                continue
            feats = np.arange(x.shape[1])
            if self.max_features is not None and self.max_features < x.shape[1]:
                feats = np.sort(self.rng.choice(x.shape[1], size=self.max_features, replace=False))
            best = None
            for f in feats:
                res = _best_split_on(x[rows, f], onehot[rows], counts)
                if res is not None and (best is None or res[0] > best[0] + _TIE * abs(best[0])):
                    best = (res[0], int(f), res[1])
            if best is None:
                continue
            _, f, thr = best
            go_left = x[rows, f] <= thr
            lrows, rrows = rows[go_left], rows[~go_left]
            self.feature[node], self.threshold[node] = f, thr
            self.left[node] = self._new(onehot[lrows].sum(axis=0))
            self.right[node] = self._new(onehot[rrows].sum(axis=0))
            # push right first so the left subtree gets the lower node ids
            stack.append((self.right[node], rrows, depth + 1))
            stack.append((self.left[node], lrows, depth + 1))
        return (np.array(self.feature, dtype=np.int64), np.array(self.threshold),
                np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                np.array(self.value))


class Tree:
    """Flat-array binary tree; ``value`` holds per-node class counts."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature, self.threshold = feature, threshold
        self.left, self.right, self.value = left, right, value

    @classmethod
    def grow(cls, x, y, max_depth=None, min_samples_split=2, max_features=None, rng=None):
        return cls(*_TreeBuilder(max_depth, min_samples_split, max_features, rng).build(x, y))

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        d = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                d[self.left[i]] = d[self.right[i]] = d[i] + 1
        return int(d.max())

    def apply(self, x) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            n = node[active]
            go_left = x[active, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = active[self.feature[node[active]] >= 0]
        return node

    def leaf_distribution(self, x) -> np.ndarray:
        v = self.value[self.apply(x)]
        return v / v.sum(axis=1, keepdims=True)

    def arrays(self, prefix="") -> dict:
        return {f"{prefix}feature": self.feature.astype(np.float64), f"{prefix}threshold": self.threshold,
                f"{prefix}left": self.left.astype(np.float64), f"{prefix}right": self.right.astype(np.float64),
                f"{prefix}value": self.value}

    @classmethod
    def from_arrays(cls, t: dict, prefix=""):
        as_int = lambda k: t[prefix + k].astype(np.int64)  # noqa: E731
        return cls(as_int("feature"), t[prefix + "threshold"], as_int("left"), as_int("right"),
                   t[prefix + "value"])


class DecisionTree(Classifier):
    kind = "dt"

    def _fit(self, x, y):
        p = self.params
        self.tree = Tree.grow(x, y, p["max_depth"], p["min_samples_split"], None,
                              np.random.default_rng(self.spec.seed))

    def _scores(self, x):
        return self.tree.leaf_distribution(x)

    def get_state(self):
        return self.tree.arrays(), {}

    def set_state(self, tensors, header):
        self.tree = Tree.from_arrays(tensors)


def _max_features(setting, d: int):
    if setting in (None, "all"):
        return None
    if setting == "sqrt":
        return max(1, int(np.sqrt(d)))
    return max(1, min(d, int(setting)))


class RandomForest(Classifier):
    """Bagged trees with per-split feature subsampling; hard majority vote."""

    kind = "rf"

    def _fit(self, x, y):
        p = self.params
        k = _max_features(p["max_features"], x.shape[1])
        self.trees = []
        n = x.shape[0]
        for t in range(int(p["trees"])):
            # per-tree stream, so trees can be grown in any order
            rng = np.random.default_rng([self.spec.seed, t])
            rows = rng.integers(n, size=n) if p["bootstrap"] else np.arange(n)
            tree_rng = rng if k is not None else np.random.default_rng(self.spec.seed)
            self.trees.append(Tree.grow(x[rows], y[rows], p["max_depth"], p["min_samples_split"],
                                        k, tree_rng))

    def votes(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros((x.shape[0], N_CLASSES))
        rows = np.arange(x.shape[0])
        for tree in self.trees:
            pred = np.argmax(tree.leaf_distribution(x), axis=1)
            out[rows, pred] += 1
        return out

    def _scores(self, x):
        return self.votes(x) / len(self.trees)

    def get_state(self):
        tensors = {}
        for i, t in enumerate(self.trees):
            tensors.update(t.arrays(f"{i}."))
        return tensors, {"n_trees": len(self.trees)}

    def set_state(self, tensors, header):
        self.trees = [Tree.from_arrays(tensors, f"{i}.") for i in range(header["n_trees"])]
