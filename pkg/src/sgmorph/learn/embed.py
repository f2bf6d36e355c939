"""Low-dimensional embedding and hierarchical clustering of feature vectors."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..kernels.tsne import kl_gradient

log = logging.getLogger(__name__)

PERPLEXITY = 30.0
ITERATIONS = 1000
EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MIN_LEARNING_RATE = 50.0
MOMENTUM = (0.5, 0.8)
MIN_GAIN = 0.01


def pairwise_feature_distances(X) -> np.ndarray:
    """Euclidean distance matrix between the rows of ``X``."""
    X = np.asarray(getattr(X, "values", X), dtype=float)
    if X.shape[0] < 2:
        return np.zeros((X.shape[0], X.shape[0]))
    return squareform(pdist(X))


@dataclass(frozen=True, eq=False)
class Embedding2D:
    coords: np.ndarray
    perplexity: float
    iterations: int
    seed: int
    kl_history: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]


def _row_affinities(d2, target_entropy, tol=1e-5, max_iter=100):
    """Conditional probabilities of one row with entropy ``log(perplexity)``."""
    beta, lo, hi = 1.0, 0.0, np.inf
    d2 = d2 - d2.min()
    for _ in range(max_iter):
        p = np.exp(-d2 * beta)
        s = p.sum()
        if s <= 0:
            p = np.ones_like(d2)
            s = p.sum()
        p /= s
        h = -np.sum(p[p > 0] * np.log(p[p > 0]))
        diff = h - target_entropy
        if abs(diff) < tol:
            break
        if diff > 0:
            lo = beta
            beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
        else:
            hi = beta
            beta = 0.5 * (beta + lo)
    return p


def joint_probabilities(D, perplexity) -> np.ndarray:
    """Symmetrised affinities from a distance matrix (Gaussian on squared distances)."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        others = np.r_[0:i, i + 1:n]
        P[i, others] = _row_affinities(D[i, others] ** 2, target)
    P = (P + P.T) / (2.0 * n)
    return np.maximum(P, 0.0)


def effective_perplexity(n: int, perplexity: float = PERPLEXITY) -> float:
    cap = (n - 1) / 3.0
    if perplexity >= n or perplexity > cap:
        if perplexity >= n:
            warnings.warn(f"perplexity {perplexity} >= n={n}; reduced to {cap:.3g}", stacklevel=3)
        return cap
    return float(perplexity)


def tsne_embed(D, perplexity: float = PERPLEXITY, iterations: int = ITERATIONS,
               seed: int = 0) -> Embedding2D:
    """Exact t-SNE of a precomputed distance matrix into the plane.

    Perplexity is reduced to ``(n - 1) / 3`` when larger. The optimiser is
    plain gradient descent with momentum 0.5 (0.8 after the exaggeration
    phase), per-coordinate gains, early exaggeration 12 for the first 250
    iterations and learning rate ``max(n / 48, 50)``. The result depends
    only on the inputs and ``seed``.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if D.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if n < 4:
        raise ValueError(f"t-SNE needs at least 4 samples, got {n}")
    perp = effective_perplexity(n, perplexity)
    P = joint_probabilities(D, perp)
    rng = np.random.default_rng(seed)
    Y = 1e-4 * rng.standard_normal((n, 2))
    lr = max(n / (4.0 * EXAGGERATION), MIN_LEARNING_RATE)
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    history = np.empty(iterations)
    for it in range(iterations):
        exag = EXAGGERATION if it < EXAGGERATION_ITERS else 1.0
        mom = MOMENTUM[0] if it < EXAGGERATION_ITERS else MOMENTUM[1]
        grad, kl = kl_gradient(P * exag, Y)
        # report the objective of the unexaggerated problem
        history[it] = kl / exag - np.log(exag) * (P.sum()) if exag != 1.0 else kl
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, MIN_GAIN, out=gains)
        update = mom * update - lr * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
    log.debug("t-SNE n=%d perplexity=%.3g final KL=%.4g", n, perp, history[-1])
    return Embedding2D(Y, perp, iterations, seed, history)


def agglomerative_cluster(points, k: int) -> np.ndarray:
    """Ward-linkage agglomerative clustering cut at ``k`` clusters.

    Merges follow the Lance-Williams update on squared Euclidean distances;
    ties go to the pair with the smallest (row, column) index. Labels are
    0..k-1 numbered by first appearance.
    """
    X = np.asarray(getattr(points, "coords", points), dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    D = squareform(pdist(X, "sqeuclidean")) if n > 1 else np.zeros((1, 1))
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    alive = np.ones(n, dtype=bool)
    members = [[i] for i in range(n)]
    for _ in range(n - k):
        flat = int(np.argmin(D))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        ni, nj = size[i], size[j]
        nk = size
        new = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * D[i, j]) / (ni + nj + nk)
        new[~alive] = np.inf
        new[i] = new[j] = np.inf
        D[i, :] = new
        D[:, i] = new
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] = ni + nj
        alive[j] = False
        members[i].extend(members[j])
        members[j] = []
    labels = np.empty(n, dtype=np.int64)
    for c, root in enumerate(sorted((min(m) for m in members if m))):
        labels[members[root]] = c
    return labels
