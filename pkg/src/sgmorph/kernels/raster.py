"""Supercover rasterisation of polylines onto a regular grid.

A segment marks every cell its interior passes through. Both implementations
cut each segment at its grid-line crossings ``t = (k - a) / (b - a)`` and
take the cell containing the midpoint of every sub-interval, so they return
the same cell set.
"""
import numpy as np

from .._jit import USE_NUMBA, njit


def supercover_py(coords, seg_ok, grid):
    """Cells touched by the segments ``coords[k] -> coords[k + 1]``.

    Parameters
    ----------
    coords : ndarray, shape (P, d)
        Points in grid units (cell ``c`` spans ``[c, c + 1)``).
    seg_ok : ndarray of bool, shape (P - 1,)
        Whether consecutive points form a segment (False across branches).
    grid : int
        Cells per axis; indices are clipped to ``[0, grid - 1]``.

    Returns
    -------
    ndarray of int64, shape (K, d)
        Cell indices, with repetitions.
    """
    P, d = coords.shape
    cap = P
    for s in range(P - 1):
        if seg_ok[s]:
            for i in range(d):
                cap += int(abs(coords[s + 1, i] - coords[s, i])) + 2
    out = np.empty((cap, d), dtype=np.int64)
    n = 0
    for p in range(P):
        for i in range(d):
            c = int(np.floor(coords[p, i]))
            out[n, i] = min(max(c, 0), grid - 1)
        n += 1
    ts = np.empty(cap + 2)
    for s in range(P - 1):
        if not seg_ok[s]:
            continue
        m = 0
        ts[m] = 0.0
        ts[m + 1] = 1.0
        m += 2
        for i in range(d):
            a = coords[s, i]
            b = coords[s + 1, i]
            if a == b:
                continue
            lo = min(a, b)
            hi = max(a, b)
            for k in range(int(np.floor(lo)) + 1, int(np.ceil(hi))):
                ts[m] = (k - a) / (b - a)
                m += 1
        tt = np.sort(ts[:m])
        for j in range(m - 1):
            if tt[j + 1] == tt[j]:
                continue
            mid = (tt[j] + tt[j + 1]) / 2.0
            for i in range(d):
                a = coords[s, i]
                x = a + mid * (coords[s + 1, i] - a)
                c = int(np.floor(x))
                out[n, i] = min(max(c, 0), grid - 1)
            n += 1
    return out[:n]


def supercover_np(coords, seg_ok, grid):
    """Vectorised equivalent of :func:`supercover_py`."""
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[1]
    cells = [np.clip(np.floor(coords).astype(np.int64), 0, grid - 1)]
    seg = np.flatnonzero(seg_ok)
    if seg.size:
        a = coords[seg]
        b = coords[seg + 1]
        sid = [seg, seg]
        tval = [np.zeros(seg.size), np.ones(seg.size)]
        for i in range(d):
            ai, bi = a[:, i], b[:, i]
            moving = ai != bi
            lo, hi = np.minimum(ai, bi), np.maximum(ai, bi)
            kmin = np.floor(lo).astype(np.int64) + 1
            cnt = np.where(moving, np.ceil(hi).astype(np.int64) - kmin, 0)
            cnt = np.maximum(cnt, 0)
            if cnt.sum() == 0:
                continue
            owner = np.repeat(np.arange(seg.size), cnt)
            start = np.cumsum(cnt) - cnt
            k = kmin[owner] + (np.arange(cnt.sum()) - start[owner])
            sid.append(seg[owner])
            tval.append((k - ai[owner]) / (bi[owner] - ai[owner]))
        sid = np.concatenate(sid)
        tval = np.concatenate(tval)
        o = np.lexsort((tval, sid))
        sid, tval = sid[o], tval[o]
        nxt = (sid[1:] == sid[:-1]) & (tval[1:] != tval[:-1])
        s = sid[:-1][nxt]
        mid = (tval[:-1][nxt] + tval[1:][nxt]) / 2.0
        pa = coords[s]
        x = pa + mid[:, None] * (coords[s + 1] - pa)
        cells.append(np.clip(np.floor(x).astype(np.int64), 0, grid - 1))
    return np.concatenate(cells, axis=0)


if USE_NUMBA:
    supercover_nb = njit(supercover_py)
    supercover = supercover_nb
else:
    supercover = supercover_np
