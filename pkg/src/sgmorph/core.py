"""Shape-graph data model and elementary length measures.

A shape graph is a graph embedded in R^d (d = 2 or 3) whose edges carry an
ordered polyline ("branch") joining the two end nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidGraphError

#: Allowed distance between a branch endpoint and its node.
BOUNDARY_TOL = 1e-9


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ShapeGraph:
    """Embedded attributed graph ``(V, E, B)``.

    Parameters
    ----------
    dim : int
        Embedding dimension, 2 or 3.
    nodes : array_like, shape (M, dim)
        Node coordinates.
    edges : array_like, shape (N, 2)
        Unordered node index pairs.
    branches : sequence of array_like
        One ordered polyline of shape ``(n_e, dim)`` per edge, running from
        ``nodes[edges[e, 0]]`` to ``nodes[edges[e, 1]]``.
    id : str
        Sample identifier.
    label : str, optional
        Group or class tag.

    Instances are immutable; arrays are stored read-only. Construction does
    not check the invariants, use :func:`validate` or :func:`check`.
    """

    dim: int
    nodes: np.ndarray
    edges: np.ndarray
    branches: tuple
    id: str = ""
    label: Optional[str] = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.size == 0:
            nodes = nodes.reshape(0, int(self.dim))
        edges = np.asarray(self.edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, 2)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "nodes", _frozen(nodes, float))
        object.__setattr__(self, "edges", _frozen(edges, np.int64))
        object.__setattr__(
            self, "branches", tuple(_frozen(np.atleast_2d(b), float) for b in self.branches)
        )
        object.__setattr__(self, "id", str(self.id))

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Straight endpoint distances ``l_e`` for every edge."""
        if self.num_edges == 0:
            return np.zeros(0)
        d = self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]]
        out = np.sqrt(np.sum(d * d, axis=1))
        out.setflags(write=False)
        return out

    @cached_property
    def branch_lengths(self) -> np.ndarray:
        """Polyline arc lengths ``s_e`` for every edge."""
        out = np.array([_polyline_length(b) for b in self.branches], dtype=float)
        out.setflags(write=False)
        return out

    @cached_property
    def all_points(self) -> np.ndarray:
        """Every polyline point of every branch, plus isolated nodes."""
        parts = list(self.branches)
        isolated = np.ones(self.num_nodes, dtype=bool)
        isolated[self.edges.ravel()] = False
        if isolated.any():
            parts.append(self.nodes[isolated])
        if not parts:
            return np.zeros((0, self.dim))
        return np.concatenate(parts, axis=0)

    def __eq__(self, other):
        if not isinstance(other, ShapeGraph):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.id == other.id
            and self.label == other.label
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.edges, other.edges)
            and len(self.branches) == len(other.branches)
            and all(np.array_equal(a, b) for a, b in zip(self.branches, other.branches))
        )

    __hash__ = None

    def replace(self, **changes) -> "ShapeGraph":
        kw = dict(
            dim=self.dim,
            nodes=self.nodes,
            edges=self.edges,
            branches=self.branches,
            id=self.id,
            label=self.label,
        )
        kw.update(changes)
        return ShapeGraph(**kw)


def _polyline_length(points: np.ndarray) -> float:
    d = np.diff(points, axis=0)
    return float(np.sum(np.sqrt(np.sum(d * d, axis=1))))


def from_polylines(polylines: Sequence, dim: Optional[int] = None, id="", label=None,
                   tol: float = 1e-9) -> ShapeGraph:
    """Build a graph from branch polylines, merging endpoints closer than ``tol``."""
    polylines = [np.asarray(p, dtype=float) for p in polylines]
    if dim is None:
        dim = polylines[0].shape[1]
    nodes: list = []
    edges = []
    index: dict = {}

    def node_index(p):
        key = tuple(np.round(p / tol).astype(np.int64))
        if key not in index:
            index[key] = len(nodes)
            nodes.append(p.copy())
        return index[key]

    for p in polylines:
        edges.append((node_index(p[0]), node_index(p[-1])))
    branches = []
    for (i, j), p in zip(edges, polylines):
        p = p.copy()
        p[0], p[-1] = nodes[i], nodes[j]
        branches.append(p)
    return ShapeGraph(dim, np.array(nodes).reshape(-1, dim), edges, branches, id=id, label=label)


def _check_edge(graph: ShapeGraph, edge: int) -> int:
    n = graph.num_edges
    if not isinstance(edge, (int, np.integer)) or not -n <= edge < n:
        raise IndexError(f"edge index {edge} out of range for {n} edges")
    return int(edge) % n


def edge_length(graph: ShapeGraph, edge: int) -> float:
    """Euclidean distance between the two end nodes of ``edge``."""
    return float(graph.edge_lengths[_check_edge(graph, edge)])


def branch_length(graph: ShapeGraph, edge: int) -> float:
    """Arc length of the polyline carried by ``edge``."""
    return float(graph.branch_lengths[_check_edge(graph, edge)])


def validate(graph: ShapeGraph, tol: float = BOUNDARY_TOL) -> list:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    d = graph.dim
    if d not in (2, 3):
        problems.append(f"dim must be 2 or 3, got {d}")
    if graph.nodes.ndim != 2 or graph.nodes.shape[1] != d:
        problems.append(f"nodes must have shape (M, {d}), got {graph.nodes.shape}")
        return problems
    if not np.all(np.isfinite(graph.nodes)):
        problems.append("nodes contain non-finite coordinates")
    M = graph.num_nodes
    if graph.edges.ndim != 2 or graph.edges.shape[1] != 2:
        problems.append(f"edges must have shape (N, 2), got {graph.edges.shape}")
        return problems
    if len(graph.branches) != graph.num_edges:
        problems.append(
            f"{graph.num_edges} edges but {len(graph.branches)} branches"
        )
        return problems
    seen = {}
    for e, (i, j) in enumerate(graph.edges):
        if not (0 <= i < M and 0 <= j < M):
            problems.append(f"edge {e}: node index out of range ({i}, {j})")
            continue
        if i == j:
            problems.append(f"edge {e}: self-loop on node {i}")
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            problems.append(f"edge {e}: duplicates edge {seen[key]} between nodes {key}")
        else:
            seen[key] = e
        b = graph.branches[e]
        if b.ndim != 2 or b.shape[1] != d:
            problems.append(f"edge {e}: branch points must have {d} coordinates")
            continue
        if b.shape[0] < 2:
            problems.append(f"edge {e}: branch needs at least 2 points")
            continue
        if not np.all(np.isfinite(b)):
            problems.append(f"edge {e}: branch contains non-finite coordinates")
            continue
        if np.max(np.abs(b[0] - graph.nodes[i])) > tol:
            problems.append(f"edge {e}: boundary constraint violated, first point != node {i}")
        if np.max(np.abs(b[-1] - graph.nodes[j])) > tol:
            problems.append(f"edge {e}: boundary constraint violated, last point != node {j}")
        seg = np.sqrt(np.sum(np.diff(b, axis=0) ** 2, axis=1))
        if np.any(seg <= 0):
            k = int(np.argmin(seg))
            problems.append(f"edge {e}: zero-length segment at point {k}")
    return problems


def check(graph: ShapeGraph, tol: float = BOUNDARY_TOL) -> ShapeGraph:
    """Raise :class:`InvalidGraphError` unless ``graph`` passes :func:`validate`."""
    problems = validate(graph, tol)
    if problems:
        raise InvalidGraphError(problems)
    return graph


def connected_components(graph: ShapeGraph) -> list:
    """Partition node indices into connected components.

    Components are ordered by their smallest node index; each is a sorted list.
    """
    M = graph.num_nodes
    parent = np.arange(M)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for i, j in graph.edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict = {}
    for v in range(M):
        groups.setdefault(find(v), []).append(v)
    return [groups[k] for k in sorted(groups)]


def subgraph(graph: ShapeGraph, keep_nodes) -> ShapeGraph:
    """Induced subgraph on ``keep_nodes`` (edges with both ends kept)."""
    keep_nodes = np.asarray(sorted(keep_nodes), dtype=np.int64)
    remap = -np.ones(graph.num_nodes, dtype=np.int64)
    remap[keep_nodes] = np.arange(len(keep_nodes))
    edges, branches = [], []
    for (i, j), b in zip(graph.edges, graph.branches):
        if remap[i] >= 0 and remap[j] >= 0:
            edges.append((remap[i], remap[j]))
            branches.append(b)
    return graph.replace(nodes=graph.nodes[keep_nodes], edges=edges, branches=branches)


# -- transforms used by tests, the benchmark and the synthetic generators --

def transform(graph: ShapeGraph, rotation=None, translation=None, scale: float = 1.0) -> ShapeGraph:
    """Apply ``x -> scale * R x + t`` to every coordinate."""
    d = graph.dim
    R = np.eye(d) if rotation is None else np.asarray(rotation, dtype=float)
    t = np.zeros(d) if translation is None else np.asarray(translation, dtype=float)

    def f(x):
        return scale * (x @ R.T) + t

    return graph.replace(nodes=f(graph.nodes), branches=[f(b) for b in graph.branches])


def reverse_branches(graph: ShapeGraph, which=None) -> ShapeGraph:
    """Flip the stored direction of the selected branches (all by default)."""
    flip = np.ones(graph.num_edges, dtype=bool) if which is None else np.asarray(which, bool)
    edges = graph.edges.copy()
    edges[flip] = edges[flip][:, ::-1]
    branches = [b[::-1] if f else b for b, f in zip(graph.branches, flip)]
    return graph.replace(edges=edges, branches=branches)


def subdivide(graph: ShapeGraph) -> ShapeGraph:
    """Insert the midpoint of every polyline segment."""
    out = []
    for b in graph.branches:
        mid = 0.5 * (b[:-1] + b[1:])
        nb = np.empty((2 * len(b) - 1, graph.dim))
        nb[0::2] = b
        nb[1::2] = mid
        out.append(nb)
    return graph.replace(branches=out)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation in SO(dim)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
