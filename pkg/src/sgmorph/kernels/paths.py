"""Weighted shortest-path kernels: Brandes betweenness and all-pairs statistics.

Graphs are passed in CSR form (``indptr``, ``indices``, ``weights``) with both
directions of every undirected edge present. The Python functions below are
valid nopython code; ``_jit.njit`` compiles them when numba is enabled and the
plain interpreter runs them otherwise.
"""
import heapq

import numpy as np

from .._jit import USE_NUMBA, njit

# Relative slack for declaring two path lengths equal.
PATH_RTOL = 1e-10


def _dijkstra_py(indptr, indices, weights, source, dist, order):
    """Fill ``dist`` from ``source``; return the number of settled nodes.

    ``order`` receives settled nodes by non-decreasing distance.
    """
    n = dist.shape[0]
    for i in range(n):
        dist[i] = np.inf
    done = np.zeros(n, dtype=np.bool_)
    dist[source] = 0.0
    heap = [(0.0, source)]
    count = 0
    while len(heap) > 0:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        order[count] = v
        count += 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            nd = d + weights[k]
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return count


def brandes_py(indptr, indices, weights):
    """Unnormalised betweenness summed over ordered (s, t) pairs."""
    n = indptr.shape[0] - 1
    bc = np.zeros(n)
    dist = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    for s in range(n):
        count = _dijkstra_py(indptr, indices, weights, s, dist, order)
        for i in range(count):
            sigma[order[i]] = 0.0
            delta[order[i]] = 0.0
        sigma[s] = 1.0
        # path counts in settle order; predecessors are tight edges
        for i in range(1, count):
            w = order[i]
            tol = PATH_RTOL * dist[w]
            acc = 0.0
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                wt = weights[k]
                if wt > 0.0 and abs(dist[v] + wt - dist[w]) <= tol:
                    acc += sigma[v]
            sigma[w] = acc
        for i in range(count - 1, 0, -1):
            w = order[i]
            tol = PATH_RTOL * dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                wt = weights[k]
                if wt > 0.0 and abs(dist[v] + wt - dist[w]) <= tol:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
    return bc


def sssp_stats_py(indptr, indices, weights):
    """All-pairs summary without materialising the distance matrix.

    Returns
    -------
    ecc : ndarray
        Largest finite distance from each source.
    total : ndarray
        Sum of finite distances from each source.
    reach : ndarray
        Number of nodes reachable from each source (excluding itself).
    """
    n = indptr.shape[0] - 1
    dist = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    ecc = np.zeros(n)
    total = np.zeros(n)
    reach = np.zeros(n, dtype=np.int64)
    for s in range(n):
        count = _dijkstra_py(indptr, indices, weights, s, dist, order)
        m = 0.0
        t = 0.0
        for i in range(count):
            d = dist[order[i]]
            t += d
            if d > m:
                m = d
        ecc[s] = m
        total[s] = t
        reach[s] = count - 1
    return ecc, total, reach


def distance_matrix_py(indptr, indices, weights):
    n = indptr.shape[0] - 1
    out = np.empty((n, n))
    dist = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    for s in range(n):
        _dijkstra_py(indptr, indices, weights, s, dist, order)
        out[s, :] = dist
    return out


if USE_NUMBA:
    _dijkstra_nb = njit(_dijkstra_py)
    brandes_nb = njit(brandes_py, _dijkstra_py=_dijkstra_nb)
    sssp_stats_nb = njit(sssp_stats_py, _dijkstra_py=_dijkstra_nb)
    distance_matrix_nb = njit(distance_matrix_py, _dijkstra_py=_dijkstra_nb)
    brandes, sssp_stats, distance_matrix = brandes_nb, sssp_stats_nb, distance_matrix_nb
else:
    brandes, sssp_stats, distance_matrix = brandes_py, sssp_stats_py, distance_matrix_py


def to_csr(n, edges, weights):
    """Symmetric CSR arrays for an undirected edge list."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    w = np.concatenate([weights, weights])
    perm = np.lexsort((dst, src))
    src, dst, w = src[perm], dst[perm], w[perm]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(dst), np.ascontiguousarray(w)
