"""Shared graph builders for the test suite."""
import networkx as nx
import numpy as np

from sgmorph.core import ShapeGraph


def random_graph(seed, n_nodes=8, dim=2, extra=4, wiggle=True):
    """Connected random graph: a random tree plus ``extra`` chords, curved branches."""
    rng = np.random.default_rng(seed)
    nodes = rng.uniform(0, 10, (n_nodes, dim))
    edges = set()
    for v in range(1, n_nodes):
        edges.add((int(rng.integers(v)), v))
    for _ in range(extra):
        u, v = sorted(rng.choice(n_nodes, 2, replace=False).tolist())
        edges.add((u, v))
    edges = sorted(edges)
    branches = []
    for u, v in edges:
        k = int(rng.integers(0, 4)) if wiggle else 0
        t = np.linspace(0, 1, k + 2)[:, None]
        b = nodes[u] + t * (nodes[v] - nodes[u])
        b[1:-1] += rng.normal(0, 0.3, (k, dim))
        branches.append(b)
    return ShapeGraph(dim, nodes, edges, branches)


def to_nx(g, weights):
    G = nx.Graph()
    G.add_nodes_from(range(g.num_nodes))
    for (u, v), w in zip(g.edges, weights):
        G.add_edge(int(u), int(v), weight=float(w))
    return G
