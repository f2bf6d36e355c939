"""Seeded generators of synthetic shape graphs.

``grid``     jittered lattice of straight streets with a few streets removed
``organic``  random planar tree of meandering branches plus a few loops
``hybrid``   a small lattice core with organic growth attached to its rim
``tree3d``   random 3-D branching tree with gently curved branches
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .core import ShapeGraph, check, connected_components, random_rotation, subgraph, transform

KINDS = ("grid", "organic", "hybrid", "tree3d")


def _curve(a, b, rng, amp, points=None, waves=None):
    """Polyline from ``a`` to ``b`` with a sinusoidal sideways offset."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    L = float(np.linalg.norm(b - a))
    n = points or max(6, int(8 * L) + 2)
    t = np.linspace(0.0, 1.0, n)[:, None]
    base = a + t * (b - a)
    if amp <= 0:
        return base
    d = (b - a) / L
    if a.size == 2:
        normals = [np.array([-d[1], d[0]])]
    else:
        helper = np.eye(3)[np.argmin(np.abs(d))]
        n1 = np.cross(d, helper)
        n1 /= np.linalg.norm(n1)
        normals = [n1, np.cross(d, n1)]
    off = np.zeros_like(base)
    for nv in normals:
        k = waves if waves is not None else rng.integers(1, 4)
        phase = rng.uniform(0, 2 * np.pi)
        env = np.sin(np.pi * t)  # vanishes at both ends
        off += amp * L * rng.uniform(0.5, 1.0) * env * np.sin(k * np.pi * t + phase) * nv
    return base + off


class _Builder:
    def __init__(self, dim):
        self.dim = dim
        self.nodes = []
        self.edges = []
        self.branches = []
        self.pairs = set()

    def node(self, p):
        self.nodes.append(np.asarray(p, float))
        return len(self.nodes) - 1

    def edge(self, u, v, poly):
        key = (min(u, v), max(u, v))
        if u == v or key in self.pairs:
            return False
        poly = np.array(poly, float)
        poly[0], poly[-1] = self.nodes[u], self.nodes[v]
        seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
        poly = np.concatenate([poly[:1], poly[1:][seg > 1e-9]])
        if len(poly) < 2:
            return False
        poly[-1] = self.nodes[v]
        self.pairs.add(key)
        self.edges.append((u, v))
        self.branches.append(poly)
        return True

    def graph(self, id, label):
        g = ShapeGraph(self.dim, np.array(self.nodes), self.edges, self.branches, id=id, label=label)
        return check(g)


def _lattice(b, rng, rows, cols, spacing=1.0, jitter=0.08, drop=0.12, origin=(0.0, 0.0)):
    """Add a jittered lattice; returns the node index grid."""
    idx = np.empty((rows, cols), dtype=np.int64)
    for r in range(rows):
        for c in range(cols):
            p = np.array(origin) + spacing * np.array([c, r]) + rng.normal(0, jitter * spacing, 2)
            idx[r, c] = b.node(p)
    cand = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                cand.append((idx[r, c], idx[r, c + 1]))
            if r + 1 < rows:
                cand.append((idx[r, c], idx[r + 1, c]))
    keep = rng.random(len(cand)) >= drop
    # always keep a spanning comb so the lattice stays connected
    for r in range(rows):
        for c in range(cols - 1):
            keep[cand.index((idx[r, c], idx[r, c + 1]))] = True
    for r in range(rows - 1):
        keep[cand.index((idx[r, 0], idx[r + 1, 0]))] = True
    for (u, v), k in zip(cand, keep):
        if k:
            pu, pv = b.nodes[u], b.nodes[v]
            b.edge(u, v, _curve(pu, pv, rng, 0.0, points=4))
    return idx


def _grow_organic(b, rng, roots, steps, step_len=1.0, amp=0.35, loops=0.0):
    """Random branching growth from the given root nodes."""
    tips = list(roots)
    heading = {r: rng.uniform(0, 2 * np.pi) for r in roots}
    grown = []
    for _ in range(steps):
        if not tips:
            break
        k = int(rng.integers(len(tips)))
        u = tips[k]
        ang = heading.get(u, rng.uniform(0, 2 * np.pi)) + rng.normal(0, 0.9)
        L = step_len * rng.uniform(0.6, 1.6)
        p = b.nodes[u] + L * np.array([np.cos(ang), np.sin(ang)])
        v = b.node(p)
        b.edge(u, v, _curve(b.nodes[u], p, rng, amp))
        heading[v] = ang
        grown.append(v)
        tips.append(v)
        if rng.random() < 0.45:
            tips.pop(k)  # u stops branching with some probability
    # loops between nearby non-adjacent grown nodes
    n_loops = int(loops * len(grown))
    pts = np.array([b.nodes[v] for v in grown]) if grown else np.zeros((0, 2))
    for _ in range(n_loops):
        if len(grown) < 4:
            break
        i = int(rng.integers(len(grown)))
        d = np.linalg.norm(pts - pts[i], axis=1)
        d[i] = np.inf
        j = int(np.argmin(d))
        if d[j] < 2.0 * step_len:
            b.edge(grown[i], grown[j], _curve(pts[i], pts[j], rng, amp))
    return grown


def synth_grid(rng, id="", label="grid") -> ShapeGraph:
    b = _Builder(2)
    rows, cols = int(rng.integers(5, 9)), int(rng.integers(5, 9))
    _lattice(b, rng, rows, cols)
    return b.graph(id, label)


def synth_organic(rng, id="", label="organic") -> ShapeGraph:
    b = _Builder(2)
    root = b.node([0.0, 0.0])
    _grow_organic(b, rng, [root], int(rng.integers(35, 60)), amp=0.35, loops=0.1)
    return b.graph(id, label)


def synth_hybrid(rng, id="", label="hybrid") -> ShapeGraph:
    b = _Builder(2)
    rows, cols = int(rng.integers(3, 5)), int(rng.integers(3, 5))
    idx = _lattice(b, rng, rows, cols)
    rim = list(idx[0]) + list(idx[-1]) + list(idx[:, 0]) + list(idx[:, -1])
    roots = list(dict.fromkeys(int(r) for r in rng.choice(rim, size=4, replace=False)))
    _grow_organic(b, rng, roots, int(rng.integers(15, 25)), amp=0.2, loops=0.0)
    return b.graph(id, label)


def synth_tree3d(rng, id="", label="tree3d") -> ShapeGraph:
    b = _Builder(3)
    root = b.node([0.0, 0.0, 0.0])
    stack = [(root, np.array([0.0, 0.0, 1.0]), 0)]
    depth_max = int(rng.integers(4, 6))
    while stack:
        u, d, depth = stack.pop()
        if depth >= depth_max:
            continue
        n_child = 1 if depth == 0 else int(rng.integers(1, 3)) + (rng.random() < 0.5)
        for _ in range(n_child):
            nd = d + rng.normal(0, 0.6, 3)
            nd /= np.linalg.norm(nd)
            L = rng.uniform(1.0, 3.0) * (0.85 ** depth)
            p = b.nodes[u] + L * nd
            v = b.node(p)
            b.edge(u, v, _curve(b.nodes[u], p, rng, 0.08))
            stack.append((v, nd, depth + 1))
    return b.graph(id, label)


_GEN = {"grid": synth_grid, "organic": synth_organic, "hybrid": synth_hybrid,
        "tree3d": synth_tree3d}


def synth_graph(kind: str, seed: int, index: int = 0, rotate: bool = True) -> ShapeGraph:
    """One graph of ``kind``; deterministic in ``(seed, index)``.

    The result is rotated by a random rigid motion so that orientation
    carries no class information.
    """
    if kind not in _GEN:
        raise ValueError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    rng = np.random.default_rng([seed, KINDS.index(kind), index])
    g = _GEN[kind](rng, id=f"{kind}_{index:04d}", label=kind)
    comps = connected_components(g)
    if len(comps) > 1:  # keep the component holding node 0
        g = subgraph(g, comps[0])
    if rotate:
        g = transform(g, rotation=random_rotation(g.dim, rng))
    return g


def synth_many(kind: str, count: int, seed: int = 0, start: Optional[int] = 0) -> list:
    if count < 1:
        raise ValueError("count must be positive")
    return [synth_graph(kind, seed, start + i) for i in range(count)]
