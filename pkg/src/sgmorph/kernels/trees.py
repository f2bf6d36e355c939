"""Best Gini split of a weighted binary-labelled node over candidate features."""
import numpy as np

from .._jit import USE_NUMBA, njit


def best_split_py(X, y, w, features):
    """Search thresholds on each feature in ``features`` (in order).

    Parameters
    ----------
    X : ndarray, shape (n, p)
    y : ndarray, shape (n,)
        0/1 labels as floats.
    w : ndarray, shape (n,)
        Positive sample weights (bootstrap multiplicities).
    features : ndarray of int64

    Returns
    -------
    feature : int
        -1 when no split separates two distinct values.
    threshold : float
        Samples with ``x <= threshold`` go left.
    gain : float
        Weighted Gini decrease ``imp(parent) - sum_k W_k / W * imp(k)``.
    """
    n = X.shape[0]
    W = 0.0
    Wy = 0.0
    for i in range(n):
        W += w[i]
        Wy += w[i] * y[i]
    p = Wy / W
    parent = 2.0 * p * (1.0 - p)
    best_f = -1
    best_t = 0.0
    best_g = 0.0
    for f in features:
        order = np.argsort(X[:, f], kind="mergesort")
        cw = 0.0
        cy = 0.0
        for r in range(n - 1):
            i = order[r]
            cw += w[i]
            cy += w[i] * y[i]
            a = X[i, f]
            b = X[order[r + 1], f]
            if not a < b:
                continue
            wr = W - cw
            pl = cy / cw
            pr = (Wy - cy) / wr
            imp = cw / W * (2.0 * pl * (1.0 - pl)) + wr / W * (2.0 * pr * (1.0 - pr))
            g = parent - imp
            if g > best_g:
                best_g = g
                best_f = f
                t = (a + b) / 2.0
                best_t = a if t >= b else t
    return best_f, best_t, best_g


def best_split_np(X, y, w, features):
    W = w.sum()
    Wy = np.dot(w, y)
    p = Wy / W
    parent = 2.0 * p * (1.0 - p)
    best_f, best_t, best_g = -1, 0.0, 0.0
    for f in features:
        order = np.argsort(X[:, f], kind="mergesort")
        xs, ws, ys = X[order, f], w[order], y[order]
        cw = np.cumsum(ws)[:-1]
        cy = np.cumsum(ws * ys)[:-1]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        wr = W - cw
        pl = cy / cw
        pr = (Wy - cy) / wr
        imp = cw / W * (2.0 * pl * (1.0 - pl)) + wr / W * (2.0 * pr * (1.0 - pr))
        g = np.where(valid, parent - imp, -np.inf)
        r = int(np.argmax(g))
        if g[r] > best_g:
            best_g = float(g[r])
            best_f = int(f)
            t = (xs[r] + xs[r + 1]) / 2.0
            best_t = float(xs[r] if t >= xs[r + 1] else t)
    return best_f, best_t, best_g


if USE_NUMBA:
    best_split_nb = njit(best_split_py)
    best_split = best_split_nb
else:
    best_split = best_split_np
