"""Population statistics over feature matrices.

Min-max normalisation, per-group feature histograms, 1-D earth mover's
distances between them, Spearman correlation and the correlation-aware
aggregate distance between groups, plus the adjusted Rand index.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .features import FEATURE_NAMES

log = logging.getLogger(__name__)

DEFAULT_BINS = 20


class ClampWarning(UserWarning):
    """The squared aggregate distance was negative and has been clamped to 0."""


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Samples x features table with the canonical column order.

    ``lo``/``hi`` hold the per-column scaling used by :func:`normalize_features`
    (``None`` for raw matrices); ``constant`` flags columns that had a single
    value.
    """

    values: np.ndarray
    ids: tuple = ()
    labels: Optional[tuple] = None
    names: tuple = FEATURE_NAMES
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    constant: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[1] != len(self.names):
            raise ValueError(f"expected {len(self.names)} columns, got {v.shape[1]}")
        object.__setattr__(self, "values", v)
        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(v.shape[0]))
        if len(ids) != v.shape[0]:
            raise ValueError("ids length does not match the number of rows")
        object.__setattr__(self, "ids", ids)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != v.shape[0]:
                raise ValueError("labels length does not match the number of rows")
            object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def normalized(self) -> bool:
        return self.lo is not None

    @classmethod
    def from_vectors(cls, vectors, labels=None) -> "FeatureMatrix":
        """Stack :class:`~sgmorph.features.FeatureVector` objects."""
        vectors = list(vectors)
        return cls(
            np.array([fv.values for fv in vectors]).reshape(-1, len(FEATURE_NAMES)),
            ids=tuple(fv.id for fv in vectors),
            labels=None if labels is None else tuple(labels),
        )

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


def _require_complete(m: FeatureMatrix):
    bad = np.argwhere(~np.isfinite(m.values))
    if bad.size:
        i, j = bad[0]
        raise ValueError(f"missing value for sample {m.ids[i]!r}, feature {m.names[j]!r}")


def normalize_features(matrix: FeatureMatrix) -> FeatureMatrix:
    """Scale every column to [0, 1] by its min and max over all samples.

    Constant columns map to 0 and are flagged in ``constant``.
    """
    _require_complete(matrix)
    v = matrix.values
    lo, hi = v.min(axis=0), v.max(axis=0)
    span = hi - lo
    constant = span <= 0
    scale = np.where(constant, 1.0, span)
    out = np.where(constant, 0.0, (v - lo) / scale)
    out = np.clip(out, 0.0, 1.0)
    if constant.any():
        log.info("constant feature columns: %s",
                 [n for n, c in zip(matrix.names, constant) if c])
    return FeatureMatrix(out, matrix.ids, matrix.labels, matrix.names, lo, hi, constant)


@dataclass(frozen=True)
class GroupSummary:
    """Per-feature probability histograms of one group on ``bins`` equal bins of [0, 1]."""

    group: str
    histograms: np.ndarray  # (n_features, bins)
    count: int
    names: tuple = field(default=FEATURE_NAMES)

    @property
    def bins(self) -> int:
        return self.histograms.shape[1]


def histogram01(values, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Count fractions on equal bins of [0, 1]; the last bin is closed on the right."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    k = np.clip(np.floor(values * bins).astype(np.int64), 0, bins - 1)
    return np.bincount(k, minlength=bins) / values.size


def group_histograms(matrix: FeatureMatrix, labels: Optional[Sequence] = None,
                     bins: int = DEFAULT_BINS) -> list:
    """One :class:`GroupSummary` per distinct label, in sorted label order."""
    if not matrix.normalized:
        raise ValueError("group_histograms expects a normalized matrix")
    labels = matrix.labels if labels is None else tuple(labels)
    if labels is None or len(labels) != matrix.n_samples:
        raise ValueError("one label per sample is required")
    labels = np.asarray(labels, dtype=object)
    out = []
    for g in sorted(set(labels.tolist()), key=str):
        rows = matrix.values[labels == g]
        if rows.shape[0] == 0:
            raise ValueError(f"group {g!r} is empty")
        hist = np.stack([histogram01(rows[:, j], bins) for j in range(rows.shape[1])])
        out.append(GroupSummary(str(g), hist, rows.shape[0], matrix.names))
    return out


def wasserstein1(a, b, lo: float = 0.0, hi: float = 1.0) -> float:
    """Earth mover's distance between two histograms on the same equal-width bins.

    Uses the 1-D closed form ``delta * sum_k |F_a(k) - F_b(k)|`` with bin-centre
    ground distance, where ``F`` are cumulative masses.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"histograms must share the same binning, got {a.shape} and {b.shape}")
    delta = (hi - lo) / a.size
    fa = np.cumsum(a / a.sum())
    fb = np.cumsum(b / b.sum())
    return float(delta * np.sum(np.abs(fa[:-1] - fb[:-1])))


def feature_distances(p: GroupSummary, q: GroupSummary) -> np.ndarray:
    """Per-feature W1 distances between two groups."""
    if p.histograms.shape != q.histograms.shape:
        raise ValueError("group summaries have different binning or feature count")
    return np.array([wasserstein1(a, b) for a, b in zip(p.histograms, q.histograms)])


def spearman_matrix(matrix: FeatureMatrix) -> np.ndarray:
    """Spearman rank correlations between columns (average ranks for ties).

    Constant columns correlate 0 with every other column and 1 with themselves.
    """
    _require_complete(matrix)
    if matrix.n_samples < 3:
        raise ValueError("spearman_matrix needs at least 3 samples")
    r = rankdata(matrix.values, axis=0)
    r = r - r.mean(axis=0)
    norm = np.sqrt(np.sum(r * r, axis=0))
    live = norm > 0
    z = np.zeros_like(r)
    z[:, live] = r[:, live] / norm[live]
    R = z.T @ z
    R = np.clip(0.5 * (R + R.T), -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


def morphological_distance_sq(d, R) -> float:
    """``d^T R d - (1 / 2N) d^T |R - I| d`` (may be negative)."""
    d = np.asarray(d, dtype=float)
    R = np.asarray(R, dtype=float)
    N = d.size
    if R.shape != (N, N):
        raise ValueError(f"correlation matrix must be {N}x{N}, got {R.shape}")
    off = np.abs(R - np.eye(N))
    return float(d @ R @ d - (d @ off @ d) / (2.0 * N))


def morphological_distance(p: GroupSummary, q: GroupSummary, R) -> float:
    """Correlation-aware aggregate of the per-feature W1 distances of two groups."""
    md2 = morphological_distance_sq(feature_distances(p, q), R)
    if md2 < 0:
        warnings.warn(f"negative squared distance {md2:.3g} clamped to 0", ClampWarning,
                      stacklevel=2)
        md2 = 0.0
    return float(np.sqrt(md2))


def distance_matrices(groups: Sequence[GroupSummary], R) -> tuple:
    """All pairwise aggregate distances and per-feature W1 matrices.

    Returns ``(md, w1)`` with ``md`` of shape (G, G) and ``w1`` of shape
    (n_features, G, G).
    """
    G = len(groups)
    nf = groups[0].histograms.shape[0] if G else len(FEATURE_NAMES)
    md = np.zeros((G, G))
    w1 = np.zeros((nf, G, G))
    for i in range(G):
        for j in range(i + 1, G):
            d = feature_distances(groups[i], groups[j])
            w1[:, i, j] = w1[:, j, i] = d
            md[i, j] = md[j, i] = morphological_distance(groups[i], groups[j], R)
    return md, w1


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * (x - 1) / 2.0))


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Pair-counting adjusted Rand index via the contingency table.

    When both partitions are trivial in the same way (the expected and the
    maximal index coincide) the result is 1 if the partitions are equal and 0
    otherwise.
    """
    a = np.asarray(labels_a, dtype=object)
    b = np.asarray(labels_b, dtype=object)
    if a.shape != b.shape:
        raise ValueError(f"label sequences differ in length: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError("adjusted_rand_index needs at least 2 samples")
    _, ia = np.unique(a.astype(str), return_inverse=True)
    _, ib = np.unique(b.astype(str), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    index = _comb2(table)
    sa = _comb2(table.sum(axis=1))
    sb = _comb2(table.sum(axis=0))
    expected = sa * sb / _comb2(n)
    maximum = 0.5 * (sa + sb)
    if maximum == expected:
        return 1.0 if index == maximum else 0.0
    return float((index - expected) / (maximum - expected))
