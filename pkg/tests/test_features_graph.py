import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgmorph.core import from_polylines, random_rotation, subdivide, transform
from sgmorph.errors import DegenerateHullError, UndefinedFeatureError
from helpers import random_graph, to_nx
from sgmorph.features import (
    FEATURE_NAMES,
    algebraic_connectivity,
    assortativity,
    avg_branch_length,
    avg_shortest_path_length,
    bending_energy,
    box_count,
    branch_bending_energy,
    branch_density,
    circuity,
    extract_features,
    feature_vector,
    fractal_dimension,
    graph_diameter,
    mean_betweenness,
    node_betweenness,
    spectral_entropy,
)


# -- closed forms -----------------------------------------------------------------

def test_single_edge_spectral_values():
    g = from_polylines([[[0, 0], [1, 0]]])
    assert spectral_entropy(g) == pytest.approx(0.0, abs=1e-9)
    assert algebraic_connectivity(g) == pytest.approx(2.0, abs=1e-9)


def test_triangle_spectral_entropy(triangle):
    assert spectral_entropy(triangle) == pytest.approx(math.log(2), abs=1e-9)


def test_path3_closed_forms(path3):
    assert assortativity(path3) == pytest.approx(-1.0, abs=1e-9)
    assert mean_betweenness(path3) == pytest.approx(1 / 3, abs=1e-9)
    assert algebraic_connectivity(path3) == pytest.approx(1.0, abs=1e-9)


def test_apl_and_diameter_of_two_three_path():
    g = from_polylines([[[0, 0], [2, 0]], [[2, 0], [5, 0]]])
    # ordered pairs: 2, 3, 5 each twice -> 20 / 6
    assert avg_shortest_path_length(g) == pytest.approx(10 / 3, abs=1e-9)
    assert graph_diameter(g) == pytest.approx(5.0, abs=1e-12)


def test_apl_uses_branch_lengths_and_diameter_edge_lengths():
    g = from_polylines([[[0, 0], [1, 1], [2, 0]]])
    assert avg_shortest_path_length(g) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert graph_diameter(g) == pytest.approx(2.0, abs=1e-12)


def test_triangle_betweenness_zero(triangle):
    assert mean_betweenness(triangle) == pytest.approx(0.0, abs=1e-12)


def test_disconnected_connectivity_is_zero():
    g = from_polylines([[[0, 0], [1, 0]], [[5, 0], [6, 0]]])
    assert algebraic_connectivity(g) == 0.0


def test_star_assortativity_is_negative():
    g = from_polylines([[[0, 0], [1, 0]], [[0, 0], [0, 1]], [[0, 0], [-1, 0]]])
    assert assortativity(g) == pytest.approx(-1.0, abs=1e-9)


def test_regular_graph_assortativity_is_zero(triangle):
    assert assortativity(triangle) == 0.0


def test_circuity_and_branch_length():
    g = from_polylines([[[0, 0], [1, 1], [2, 0]], [[2, 0], [3, 0]]])
    assert circuity(g) == pytest.approx((2 * math.sqrt(2) + 1) / 3)
    assert avg_branch_length(g) == pytest.approx((2 * math.sqrt(2) + 1) / 2)


def test_branch_density_of_unit_square():
    g = from_polylines([[[0, 0], [1, 0]], [[1, 0], [1, 1]], [[1, 1], [0, 1]], [[0, 1], [0, 0]]])
    assert branch_density(g) == pytest.approx(4.0)


def test_collinear_hull_is_degenerate():
    g = from_polylines([[[0, 0], [1, 0]], [[1, 0], [2, 0]]])
    with pytest.raises(DegenerateHullError):
        branch_density(g)
    with pytest.raises(UndefinedFeatureError) as info:
        feature_vector(g)
    assert info.value.feature == "branch_density"


def test_bending_energy_of_circle_arc():
    # curvature 1/r everywhere -> length-normalised energy 1/r^2
    r = 2.0
    t = np.linspace(0, np.pi, 2001)
    arc = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
    assert branch_bending_energy(arc) == pytest.approx(1 / r ** 2, rel=1e-3)


def test_collinear_points_do_not_change_bending():
    a = np.array([[0, 0], [1, 0], [1, 1]], float)
    b = np.array([[0, 0], [0.25, 0], [0.5, 0], [1, 0], [1, 0.5], [1, 1]], float)
    assert branch_bending_energy(b) == pytest.approx(branch_bending_energy(a), rel=1e-12)


def test_straight_branch_has_no_bending():
    assert branch_bending_energy(np.array([[0, 0], [1, 0], [2, 0], [5, 0]], float)) == 0.0


# -- oracles ----------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 12))
def test_betweenness_matches_networkx(seed, n):
    g = random_graph(seed, n)
    ref = nx.betweenness_centrality(to_nx(g, g.edge_lengths), weight="weight", normalized=True)
    assert np.allclose(node_betweenness(g), [ref[i] for i in range(n)], atol=1e-9)


def _brute_betweenness(g):
    """Enumerate every simple path between every pair of nodes."""
    n = g.num_nodes
    adj = {}
    for (u, v), w in zip(g.edges, g.edge_lengths):
        adj.setdefault(int(u), {})[int(v)] = w
        adj.setdefault(int(v), {})[int(u)] = w
    bc = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        paths = []
        for k in range(n - 1):
            for mid in itertools.permutations([x for x in range(n) if x not in (s, t)], k):
                p = (s, *mid, t)
                if all(p[i + 1] in adj.get(p[i], {}) for i in range(len(p) - 1)):
                    paths.append((sum(adj[p[i]][p[i + 1]] for i in range(len(p) - 1)), p))
        if not paths:
            continue
        best = min(c for c, _ in paths)
        shortest = [p for c, p in paths if abs(c - best) <= 1e-10 * best]
        for p in shortest:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(shortest)
    return bc * 2.0 / ((n - 1) * (n - 2))


@pytest.mark.parametrize("seed", range(15))
def test_betweenness_brute_force_small(seed):
    g = random_graph(seed, n_nodes=5, extra=3)
    assert np.allclose(node_betweenness(g), _brute_betweenness(g), atol=1e-12)


def test_betweenness_with_tied_paths():
    # unit square: two equal shortest paths between opposite corners
    g = from_polylines([[[0, 0], [1, 0]], [[1, 0], [1, 1]], [[1, 1], [0, 1]], [[0, 1], [0, 0]]])
    assert np.allclose(node_betweenness(g), _brute_betweenness(g), atol=1e-12)
    assert np.allclose(node_betweenness(g), 1 / 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_assortativity_matches_networkx(seed, n):
    g = random_graph(seed, n, extra=3)
    if g.num_edges < 2:
        return
    G = to_nx(g, g.edge_lengths)
    ref = nx.degree_pearson_correlation_coefficient(G, weight="weight")
    assert assortativity(g) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_path_features_match_networkx(seed, n):
    g = random_graph(seed, n)
    Gs = to_nx(g, g.branch_lengths)
    lengths = dict(nx.all_pairs_dijkstra_path_length(Gs))
    vals = [d for u in lengths for v, d in lengths[u].items() if u != v]
    assert avg_shortest_path_length(g) == pytest.approx(np.mean(vals), rel=1e-12)
    Gl = to_nx(g, g.edge_lengths)
    ecc = max(max(d.values()) for d in dict(nx.all_pairs_dijkstra_path_length(Gl)).values())
    assert graph_diameter(g) == pytest.approx(ecc, rel=1e-12)


def test_disconnected_path_features():
    g = from_polylines([[[0, 0], [1, 0]], [[5, 0], [8, 0]]])
    assert graph_diameter(g) == pytest.approx(3.0)
    assert avg_shortest_path_length(g) == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_algebraic_connectivity_matches_networkx(seed):
    g = random_graph(seed, 7)
    ref = nx.algebraic_connectivity(to_nx(g, g.edge_lengths), weight="weight", method="tracemin_lu",
                                    tol=1e-12)
    assert algebraic_connectivity(g) == pytest.approx(ref, rel=1e-6)


# -- box counting -----------------------------------------------------------------

def test_straight_branch_dimension_near_one():
    g = from_polylines([np.linspace([0, 0], [10, 3], 50)])
    assert abs(fractal_dimension(g) - 1.0) <= 0.15


def test_box_count_series_is_monotone(rng):
    g = random_graph(3, 10)
    s = box_count(g)
    assert np.all(np.diff(s.counts) >= 0)
    assert s.counts[0] == 1
    assert s.used.sum() >= 4


def test_filled_square_raster_has_dimension_two():
    # closely spaced lines fill the raster at every fitted scale
    lines = [[[0, y], [1, y]] for y in np.linspace(0, 1, 1023)]
    g = from_polylines(lines)
    assert abs(fractal_dimension(g) - 2.0) <= 0.15


def test_fractal_dimension_is_clamped():
    g = random_graph(5, 12)
    assert 0.0 <= fractal_dimension(g) <= 2.0


# -- invariances ------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_graph_features_are_rigid_invariant(seed, dim):
    rng = np.random.default_rng(seed)
    g = random_graph(seed, 9, dim=dim)
    h = transform(g, random_rotation(dim, rng), rng.uniform(-50, 50, dim))
    a, b = extract_features(g), extract_features(h)
    for k, name in enumerate(FEATURE_NAMES):
        if name == "fractal_dimension":
            assert abs(a.values[k] - b.values[k]) <= 0.1
        else:
            assert b.values[k] == pytest.approx(a.values[k], rel=1e-6, abs=1e-9), name


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_subdivision_keeps_path_features(seed):
    g = random_graph(seed, 8)
    h = subdivide(g)
    for fn in (spectral_entropy, mean_betweenness, graph_diameter, avg_shortest_path_length,
               circuity, avg_branch_length, bending_energy):
        assert fn(h) == pytest.approx(fn(g), rel=1e-9, abs=1e-12)


def test_bending_energy_resampling_convergence():
    t1 = np.linspace(0, 2.0, 201)
    t2 = np.linspace(0, 2.0, 401)
    curve = lambda t: np.stack([t, np.sin(2 * t)], axis=1)  # noqa: E731
    a = branch_bending_energy(curve(t1))
    b = branch_bending_energy(curve(t2))
    assert b == pytest.approx(a, rel=1e-3)


def test_bending_energy_mean_over_branches():
    g = from_polylines([[[0, 0], [1, 0], [2, 0]], [[2, 0], [3, 1], [4, 0]]])
    expected = (0.0 + branch_bending_energy(g.branches[1])) / 2
    assert bending_energy(g) == pytest.approx(expected)
