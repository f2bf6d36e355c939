"""Per-class evaluation and repeated stratified train/test runs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .forest import ForestModel, train_random_forest_ovr
from .oversample import smote_center_oversample

log = logging.getLogger(__name__)

METRICS = ("sensitivity", "precision", "f1", "accuracy")


@dataclass(frozen=True, eq=False)
class ClassReport:
    """One-vs-rest confusion counts and rates for every class.

    ``undefined`` lists ``(class, metric)`` pairs whose denominator was zero;
    those rates are reported as 0.
    """

    classes: tuple
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray
    sensitivity: np.ndarray
    precision: np.ndarray
    f1: np.ndarray
    accuracy: np.ndarray
    overall_accuracy: float
    undefined: tuple = ()

    def metric(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def as_dict(self) -> dict:
        return {
            "overall_accuracy": self.overall_accuracy,
            "classes": {
                c: {
                    "tp": int(self.tp[k]), "fp": int(self.fp[k]),
                    "tn": int(self.tn[k]), "fn": int(self.fn[k]),
                    **{m: float(self.metric(m)[k]) for m in METRICS},
                }
                for k, c in enumerate(self.classes)
            },
            "undefined": [list(u) for u in self.undefined],
        }


def _ratio(num, den, cls, name, undefined):
    if den == 0:
        undefined.append((cls, name))
        return 0.0
    return num / den


def report_from_predictions(classes: Sequence, truth, pred) -> ClassReport:
    classes = tuple(str(c) for c in classes)
    truth = np.asarray([str(t) for t in truth], dtype=object)
    pred = np.asarray([str(p) for p in pred], dtype=object)
    unknown = set(truth.tolist()) - set(classes)
    if unknown:
        raise ValueError(f"unknown class in truth: {sorted(unknown)[0]!r}")
    n = truth.size
    k = len(classes)
    tp, fp, tn, fn = (np.zeros(k, dtype=np.int64) for _ in range(4))
    sens, prec, f1, acc = (np.zeros(k) for _ in range(4))
    undefined: list = []
    for j, c in enumerate(classes):
        t, p = truth == c, pred == c
        tp[j] = np.sum(t & p)
        fp[j] = np.sum(~t & p)
        fn[j] = np.sum(t & ~p)
        tn[j] = n - tp[j] - fp[j] - fn[j]
        sens[j] = _ratio(tp[j], tp[j] + fn[j], c, "sensitivity", undefined)
        prec[j] = _ratio(tp[j], tp[j] + fp[j], c, "precision", undefined)
        s = sens[j] + prec[j]
        f1[j] = 2.0 * sens[j] * prec[j] / s if s > 0 else 0.0
        acc[j] = (tp[j] + tn[j]) / n
    overall = float(np.mean(truth == pred)) if n else 0.0
    return ClassReport(classes, tp, fp, tn, fn, sens, prec, f1, acc, overall, tuple(undefined))


def evaluate(model: ForestModel, X, truth) -> ClassReport:
    """Score ``model`` on ``X`` against the true labels."""
    truth = [str(t) for t in truth]
    unknown = set(truth) - set(model.classes)
    if unknown:
        raise ValueError(f"unknown class in truth: {sorted(unknown)[0]!r}")
    return report_from_predictions(model.classes, truth, model.predict(X))


@dataclass(frozen=True, eq=False)
class SplitRunsReport:
    """Mean and standard deviation of per-run reports and MDI importances."""

    classes: tuple
    runs: tuple  # ClassReport per run
    mean: dict  # metric -> (n_classes,) array, plus "overall_accuracy"
    std: dict
    importances_mean: np.ndarray
    importances_std: np.ndarray
    seeds: tuple
    params: dict = field(default_factory=dict)
    names: tuple = ()

    def ranking(self) -> list:
        order = np.argsort(-self.importances_mean, kind="stable")
        return [(self.names[i], float(self.importances_mean[i]), float(self.importances_std[i]))
                for i in order]

    def as_dict(self) -> dict:
        return {
            "params": self.params,
            "seeds": list(self.seeds),
            "overall_accuracy": {"mean": float(self.mean["overall_accuracy"]),
                                 "std": float(self.std["overall_accuracy"])},
            "classes": {
                c: {m: {"mean": float(self.mean[m][k]), "std": float(self.std[m][k])}
                    for m in METRICS}
                for k, c in enumerate(self.classes)
            },
            "mdi": [{"feature": f, "mean": m, "std": s} for f, m, s in self.ranking()],
            "runs": [r.as_dict() for r in self.runs],
        }


def stratified_split(labels, train_frac: float, rng: np.random.Generator):
    """Per-class random split; returns sorted ``(train, test)`` index arrays."""
    labels = np.asarray([str(v) for v in labels], dtype=object)
    train = []
    for c in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        k = int(round(train_frac * idx.size))
        k = min(max(k, 1), idx.size)
        train.append(idx[:k])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(labels.size), train)
    return train, test


def split_runs(X, labels, train_frac: float = 0.7, runs: int = 10, seed: int = 0,
               trees: int = 100, max_depth: Optional[int] = None, oversample: bool = True,
               max_retries: int = 20) -> SplitRunsReport:
    """Repeated stratified train/test evaluation of the one-vs-rest forest.

    Run ``r`` uses seed ``seed + r`` for the split, the oversampling and the
    forest. Oversampling touches training rows only. A split leaving a class
    with fewer than 2 training rows is redrawn.
    """
    X = np.asarray(getattr(X, "values", X), dtype=float)
    labels = np.asarray([str(v) for v in labels], dtype=object)
    classes = tuple(sorted(set(labels.tolist())))
    if len(classes) < 2:
        raise ValueError("at least two classes are required")
    reports, imps, seeds = [], [], []
    names = None
    for r in range(runs):
        s = seed + r
        rng = np.random.default_rng(s)
        for _ in range(max_retries):
            train, test = stratified_split(labels, train_frac, rng)
            counts = [np.sum(labels[train] == c) for c in classes]
            if min(counts) >= 2 and test.size > 0:
                break
        else:
            raise ValueError(f"could not draw a usable split for run {r} after {max_retries} tries")
        Xtr, ytr = X[train], labels[train]
        if oversample:
            Xtr, ytr = smote_center_oversample(Xtr, ytr, seed=s)
        model = train_random_forest_ovr(Xtr, ytr, trees=trees, max_depth=max_depth, seed=s)
        names = model.names
        rep = report_from_predictions(classes, labels[test], model.predict(X[test]))
        reports.append(rep)
        imps.append(model.importances.mean(axis=0))
        seeds.append(s)
        log.info("run %d: accuracy %.4f", r, rep.overall_accuracy)
    mean, std = {}, {}
    for m in METRICS:
        arr = np.stack([rep.metric(m) for rep in reports])
        mean[m], std[m] = arr.mean(axis=0), arr.std(axis=0)
    acc = np.array([rep.overall_accuracy for rep in reports])
    mean["overall_accuracy"], std["overall_accuracy"] = float(acc.mean()), float(acc.std())
    imps = np.stack(imps)
    params = {"train_frac": train_frac, "runs": runs, "seed": seed, "trees": trees,
              "max_depth": max_depth, "oversample": oversample}
    return SplitRunsReport(classes, tuple(reports), mean, std, imps.mean(axis=0), imps.std(axis=0),
                           tuple(seeds), params, names)
