"""One-vs-rest random forests of Gini decision trees with MDI importances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..features import FEATURE_NAMES
from ..kernels.trees import best_split

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    """Array-encoded binary tree. ``feature[k] == -1`` marks a leaf.

    Internal node ``k`` sends ``x[feature[k]] <= threshold[k]`` to ``left[k]``.
    ``value[k]`` is the weighted positive fraction of the training samples
    reaching node ``k``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importances: np.ndarray  # unnormalised weighted impurity decrease per feature

    @property
    def node_count(self) -> int:
        return self.feature.size

    def predict_value(self, X) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f != LEAF
            if not inner.any():
                return self.value[node]
            go_left = X[rows, np.where(inner, f, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)

    def votes(self, X) -> np.ndarray:
        """Hard positive votes: 1, 0, or 0.5 when the leaf is evenly split."""
        v = self.predict_value(X)
        return np.where(v > 0.5, 1.0, np.where(v < 0.5, 0.0, 0.5))


def grow_tree(X, y, w, rng: np.random.Generator, max_features: int,
              max_depth: Optional[int] = None, min_leaf: int = 1) -> Tree:
    """Grow an unpruned Gini tree on weighted samples (zero weights ignored)."""
    p = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []
    imp = np.zeros(p)
    W_root = float(w.sum())
    stack = [(np.flatnonzero(w > 0), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        k = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = k
        ws, ys = w[idx], y[idx]
        W = float(ws.sum())
        pos = float(np.dot(ws, ys)) / W
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(pos)
        if pos in (0.0, 1.0) or (max_depth is not None and depth >= max_depth) \
                or ws.sum() < 2 * min_leaf:
            continue
        Xs = X[idx]
        order = rng.permutation(p)
        f, t, g = best_split(Xs, ys, ws, order[:max_features].astype(np.int64))
        if f < 0 and max_features < p:
            # keep drawing features until one admits a split
            f, t, g = best_split(Xs, ys, ws, order[max_features:].astype(np.int64))
        if f < 0 or g <= 0:
            continue
        go_left = Xs[:, f] <= t
        feature[k] = int(f)
        threshold[k] = float(t)
        imp[f] += W / W_root * g
        stack.append((idx[~go_left], depth + 1, k, False))
        stack.append((idx[go_left], depth + 1, k, True))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value), imp)


@dataclass(frozen=True, eq=False)
class BinaryForest:
    positive: str
    trees: tuple
    importances: np.ndarray  # normalised MDI, sums to 1

    def vote_fraction(self, X) -> np.ndarray:
        return np.mean([t.votes(X) for t in self.trees], axis=0)


def _normalise(v):
    s = v.sum()
    return v / s if s > 0 else np.full(v.size, 1.0 / v.size)


def train_binary_forest(X, y, positive, trees, max_depth, seed_seq) -> BinaryForest:
    n, p = X.shape
    max_features = max(1, int(math.isqrt(p)))
    rngs = [np.random.default_rng(s) for s in seed_seq.spawn(trees)]
    out = []
    for rng in rngs:
        w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
        out.append(grow_tree(X, y, w, rng, max_features, max_depth))
    # trees that never split carry no importance information
    per_tree = [_normalise(t.importances) for t in out if t.node_count > 1]
    mdi = _normalise(np.mean(per_tree, axis=0)) if per_tree else np.full(p, 1.0 / p)
    return BinaryForest(positive, tuple(out), mdi)


@dataclass(frozen=True, eq=False)
class ForestModel:
    """One binary forest per class; prediction is the class with most positive votes."""

    classes: tuple
    forests: tuple
    trees: int
    max_depth: Optional[int]
    max_features: int
    seed: int
    names: tuple = field(default=FEATURE_NAMES)

    @property
    def importances(self) -> np.ndarray:
        """(n_classes, n_features) normalised MDI of every binary model."""
        return np.stack([f.importances for f in self.forests])

    def vote_fractions(self, X) -> np.ndarray:
        X = np.asarray(getattr(X, "values", X), dtype=float)
        return np.stack([f.vote_fraction(X) for f in self.forests], axis=1)

    def predict(self, X) -> np.ndarray:
        # argmax takes the first maximum, i.e. ties go to the earlier class
        v = self.vote_fractions(X)
        return np.array(self.classes, dtype=object)[np.argmax(v, axis=1)]

    def metadata(self) -> dict:
        return {"trees": self.trees, "max_depth": self.max_depth,
                "max_features": self.max_features, "seed": self.seed,
                "classes": list(self.classes)}


def train_random_forest_ovr(X, labels: Sequence, trees: int = 100, max_depth: Optional[int] = None,
                            seed: int = 0) -> ForestModel:
    """Fit one bootstrap forest per class against the rest.

    Each tree sees a bootstrap resample and chooses among ``floor(sqrt(p))``
    random features at every split. Classes are ordered by sorted label.
    """
    X = np.asarray(getattr(X, "values", X), dtype=float)
    labels = np.asarray([str(v) for v in labels], dtype=object)
    if labels.size != X.shape[0]:
        raise ValueError("one label per row is required")
    classes = tuple(sorted(set(labels.tolist())))
    if len(classes) < 2:
        raise ValueError("at least two classes are required")
    if trees < 1:
        raise ValueError("trees must be positive")
    root = np.random.SeedSequence(seed)
    forests = []
    for c, ss in zip(classes, root.spawn(len(classes))):
        y = (labels == c).astype(float)
        forests.append(train_binary_forest(X, y, c, trees, max_depth, ss))
    p = X.shape[1]
    names = FEATURE_NAMES if p == len(FEATURE_NAMES) else tuple(f"x{j}" for j in range(p))
    return ForestModel(classes, tuple(forests), trees, max_depth,
                       max(1, int(math.isqrt(p))), seed, names)


def mdi_ranking(model: ForestModel, names: Optional[Sequence[str]] = None) -> list:
    """``(feature, importance)`` pairs, most important first.

    Importances are averaged over the binary models; ties keep the canonical
    feature order.
    """
    names = tuple(names) if names is not None else model.names
    imp = model.importances.mean(axis=0)
    order = np.argsort(-imp, kind="stable")
    return [(names[i], float(imp[i])) for i in order]
