"""Gromov-Wasserstein discrepancy between node sets via conditional gradient.

The squared-loss objective

    E(T) = sum_{i,j,k,l} (D1[i,k] - D2[j,l])**2 T[i,j] T[k,l]

is minimised over couplings ``T`` with uniform marginals by Frank-Wolfe
iterations: the linear subproblem is an exact transport problem and the step
length is the exact minimiser of ``E`` along the search direction.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import pdist, squareform

from .core import ShapeGraph

log = logging.getLogger(__name__)

MAX_NODES = 1500
MARGINAL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """Distance matrix with uniform weights."""

    D: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
            raise ValueError("distance matrix must be square and nonempty")
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)


def vertex_space(graph: ShapeGraph, max_nodes: Optional[int] = None,
                 seed: int = 0) -> MetricMeasureSpace:
    """Euclidean distances between the nodes of ``graph``.

    With ``max_nodes`` set, larger graphs are uniformly subsampled (seeded).
    """
    X = graph.nodes
    if X.shape[0] == 0:
        raise ValueError("graph has no nodes")
    if max_nodes is not None and X.shape[0] > max_nodes:
        warnings.warn(f"graph {graph.id!r}: {X.shape[0]} nodes subsampled to {max_nodes}",
                      stacklevel=2)
        keep = np.sort(np.random.default_rng(seed).choice(X.shape[0], max_nodes, replace=False))
        X = X[keep]
    if X.shape[0] == 1:
        return MetricMeasureSpace(np.zeros((1, 1)))
    return MetricMeasureSpace(squareform(pdist(X)))


class GWResult(NamedTuple):
    cost: float
    coupling: np.ndarray
    iterations: int
    converged: bool
    history: np.ndarray


def _tensor_product(D1, D2, T):
    return D1 @ T @ D2


def gw_objective(D1, D2, T) -> float:
    """``E(T)`` via the squared-loss split (no quartic tensor)."""
    p, q = T.sum(axis=1), T.sum(axis=0)
    const = (D1 * D1) @ p @ p + (D2 * D2) @ q @ q
    return float(const - 2.0 * np.sum(_tensor_product(D1, D2, T) * T))


def _const_term(D1, D2, p, q):
    return np.outer((D1 * D1) @ p, np.ones(q.size)) + np.outer(np.ones(p.size), (D2 * D2) @ q)


def transport_lp(C, p, q) -> np.ndarray:
    """Exact minimiser of ``<C, S>`` over couplings of ``p`` and ``q``.

    Equal uniform marginals are solved as an assignment problem (an extreme
    point of the coupling polytope is then a scaled permutation); other cases
    go to the HiGHS LP solver.
    """
    n1, n2 = C.shape
    if n1 == n2 and np.allclose(p, 1.0 / n1) and np.allclose(q, 1.0 / n2):
        r, c = linear_sum_assignment(C)
        S = np.zeros_like(C)
        S[r, c] = 1.0 / n1
        return S
    rows = sparse.kron(sparse.eye(n1), np.ones((1, n2)))
    cols = sparse.kron(np.ones((1, n1)), sparse.eye(n2))
    A = sparse.vstack([rows, cols]).tocsr()
    b = np.concatenate([p, q])
    res = linprog(C.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return np.maximum(res.x.reshape(n1, n2), 0.0)


def _sinkhorn_project(K, p, q, iters=1000):
    for _ in range(iters):
        K = K * (p / K.sum(axis=1))[:, None]
        K = K * (q / K.sum(axis=0))[None, :]
        if np.abs(K.sum(axis=1) - p).max() < 1e-14:
            break
    return K


def _frank_wolfe(D1, D2, T, max_iters, tol):
    p, q = T.sum(axis=1), T.sum(axis=0)
    const = _const_term(D1, D2, p, q)
    E = gw_objective(D1, D2, T)
    scale = max(abs(E), np.max(D1) ** 2 + np.max(D2) ** 2, 1e-300)
    history = [E]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        G = 2.0 * (const - 2.0 * _tensor_product(D1, D2, T))
        S = transport_lp(G, p, q)
        delta = S - T
        dtd = _tensor_product(D1, D2, delta)
        a = -2.0 * np.sum(dtd * delta)
        b = -4.0 * np.sum(dtd * T)
        if a > 0:
            alpha = min(max(-b / (2.0 * a), 0.0), 1.0)
        else:
            alpha = 1.0 if a + b < 0 else 0.0
        if alpha == 0.0:
            converged = True
            break
        T_new = T + alpha * delta
        E_new = gw_objective(D1, D2, T_new)
        if E_new > E + 1e-12 * scale:
            raise RuntimeError(
                f"objective increased from {E!r} to {E_new!r} at iteration {it}"
            )
        rel = abs(E - E_new) / max(abs(E), 1e-300)
        T, E = T_new, E_new
        history.append(E)
        if rel < tol or E <= 1e-15 * scale:
            converged = True
            break
    return T, max(E, 0.0), it, converged, np.array(history)


def gw_solve(A: MetricMeasureSpace, B: MetricMeasureSpace, max_iters: int = 200,
             tol: float = 1e-7, seed: int = 0, starts: int = 1) -> GWResult:
    """Stationary value of the GW objective and its coupling.

    The first start is the product coupling. Each of the ``starts - 1``
    extra starts is a seeded random coupling; the lowest cost wins.
    """
    D1, D2 = A.D, B.D
    p, q = A.weights, B.weights
    best = None
    rng = np.random.default_rng(seed)
    for s in range(max(1, starts)):
        if s == 0:
            T0 = np.outer(p, q)
        else:
            T0 = _sinkhorn_project(rng.random((p.size, q.size)) + 1e-3, p, q)
        T, E, it, conv, hist = _frank_wolfe(D1, D2, T0, max_iters, tol)
        if best is None or E < best.cost:
            best = GWResult(E, T, it, conv, hist)
    return best


def gw_distance(A: MetricMeasureSpace, B: MetricMeasureSpace, max_iters: int = 200,
                tol: float = 1e-7, seed: int = 0, starts: int = 1):
    """``(cost, coupling)`` of :func:`gw_solve`."""
    res = gw_solve(A, B, max_iters, tol, seed, starts)
    return res.cost, res.coupling


@dataclass(frozen=True, eq=False)
class GWMatrix:
    distances: np.ndarray  # sqrt(cost), symmetric, zero diagonal
    costs: np.ndarray
    iterations: np.ndarray
    ids: tuple


def gw_matrix(graphs: Sequence[ShapeGraph], max_iters: int = 200, tol: float = 1e-7,
              seed: int = 0, starts: int = 1, max_nodes: int = MAX_NODES,
              workers: int = 1) -> GWMatrix:
    """Pairwise GW distances ``sqrt(cost)`` between the node sets of ``graphs``."""
    if len(graphs) < 2:
        raise ValueError("gw_matrix needs at least 2 graphs")
    spaces = [vertex_space(g, max_nodes, seed) for g in graphs]
    n = len(graphs)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def solve(pair):
        i, j = pair
        return gw_solve(spaces[i], spaces[j], max_iters, tol, seed, starts)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(solve, pairs))
    else:
        results = [solve(pr) for pr in pairs]
    costs = np.zeros((n, n))
    iters = np.zeros((n, n), dtype=np.int64)
    for (i, j), r in zip(pairs, results):
        costs[i, j] = costs[j, i] = r.cost
        iters[i, j] = iters[j, i] = r.iterations
        log.debug("gw %s-%s cost=%.6g iterations=%d", graphs[i].id, graphs[j].id, r.cost,
                  r.iterations)
    return GWMatrix(np.sqrt(np.maximum(costs, 0.0)), costs, iters, tuple(g.id for g in graphs))


def coupling_marginal_error(T, p, q) -> float:
    return float(max(np.abs(T.sum(axis=1) - p).max(), np.abs(T.sum(axis=0) - q).max()))
