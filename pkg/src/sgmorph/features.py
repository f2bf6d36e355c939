"""Topological and geometric shape-graph features and the 19-entry feature vector."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import directional
from .core import ShapeGraph, check, connected_components
from .errors import DegenerateHullError, UndefinedFeatureError
from .kernels import paths, raster

FEATURE_NAMES = (
    "num_edges",
    "mean_betweenness",
    "spectral_entropy",
    "algebraic_connectivity",
    "assortativity",
    "graph_diameter",
    "avg_branch_length",
    "branch_density",
    "bending_energy",
    "avg_shortest_path_length",
    "circuity",
    "fractal_dimension",
    "directional_std",
    "q1",
    "q2",
    "q3",
    "q4",
    "directional_entropy",
    "orientation_order",
)
DIRECTIONAL_NAMES = FEATURE_NAMES[12:]

#: Raster resolution for box counting, cells per axis.
FRACTAL_GRID = {2: 1024, 3: 256}
HULL_EPS = 1e-12
#: Unit-direction change below which an interior vertex counts as collinear.
COLLINEAR_TOL = 1e-9


# -- spectral -----------------------------------------------------------------

def weighted_laplacian(graph: ShapeGraph) -> np.ndarray:
    """``L = D - A`` with ``A_ij`` the edge length of edge (i, j)."""
    M = graph.num_nodes
    A = np.zeros((M, M))
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    np.add.at(A, (i, j), graph.edge_lengths)
    np.add.at(A, (j, i), graph.edge_lengths)
    return np.diag(A.sum(axis=1)) - A


def laplacian_spectrum(graph: ShapeGraph) -> np.ndarray:
    """Ascending eigenvalues of the weighted Laplacian."""
    return np.linalg.eigvalsh(weighted_laplacian(graph))


def _spectral_entropy(eigs) -> float:
    lam = np.clip(eigs, 0.0, None)
    total = lam.sum()
    if not total > 0:
        raise UndefinedFeatureError("spectral_entropy", "Laplacian has no positive eigenvalue")
    return directional.shannon_entropy(lam / total)


def spectral_entropy(graph: ShapeGraph, eigs=None) -> float:
    """Shannon entropy (natural log) of the normalised Laplacian spectrum."""
    if graph.num_edges == 0:
        raise UndefinedFeatureError("spectral_entropy", "graph has no edges")
    if eigs is None:
        eigs = laplacian_spectrum(graph)
    return _spectral_entropy(eigs)


def algebraic_connectivity(graph: ShapeGraph, eigs=None) -> float:
    """Second smallest Laplacian eigenvalue; exactly 0 for disconnected graphs."""
    if graph.num_nodes < 2:
        raise UndefinedFeatureError("algebraic_connectivity", "fewer than 2 nodes")
    if len(connected_components(graph)) > 1:
        return 0.0
    if eigs is None:
        eigs = laplacian_spectrum(graph)
    return float(max(eigs[1], 0.0))


# -- path based ----------------------------------------------------------------

def _csr(graph, weights):
    return paths.to_csr(graph.num_nodes, graph.edges, weights)


def node_betweenness(graph: ShapeGraph) -> np.ndarray:
    """Edge-length weighted betweenness, normalised by 2 / ((M-1)(M-2))."""
    M = graph.num_nodes
    if M < 3:
        return np.zeros(M)
    bc = paths.brandes(*_csr(graph, graph.edge_lengths))
    # brandes counts each unordered pair twice
    return bc / ((M - 1) * (M - 2))


def mean_betweenness(graph: ShapeGraph) -> float:
    if graph.num_nodes < 3:
        return 0.0
    return float(node_betweenness(graph).mean())


def node_strengths(graph: ShapeGraph) -> np.ndarray:
    s = np.zeros(graph.num_nodes)
    np.add.at(s, graph.edges[:, 0], graph.edge_lengths)
    np.add.at(s, graph.edges[:, 1], graph.edge_lengths)
    return s


def assortativity(graph: ShapeGraph) -> float:
    """Pearson correlation of endpoint strengths over edges, symmetrised.

    Returns 0 when the strengths are constant over the edge endpoints (zero
    variance relative to their second moment).
    """
    if graph.num_edges < 2:
        raise UndefinedFeatureError("assortativity", "fewer than 2 edges")
    s = node_strengths(graph)
    x, y = s[graph.edges[:, 0]], s[graph.edges[:, 1]]
    mean = np.mean((x + y) / 2.0)
    second = np.mean((x * x + y * y) / 2.0)
    den = second - mean * mean
    if den < 1e-12 * second or not second > 0:
        return 0.0
    return float((np.mean(x * y) - mean * mean) / den)


def graph_diameter(graph: ShapeGraph) -> float:
    """Largest edge-length weighted distance within any connected component."""
    if graph.num_nodes == 0:
        raise UndefinedFeatureError("graph_diameter", "graph has no nodes")
    if graph.num_edges == 0:
        return 0.0
    ecc, _, _ = paths.sssp_stats(*_csr(graph, graph.edge_lengths))
    return float(ecc.max())


def avg_shortest_path_length(graph: ShapeGraph) -> float:
    """Mean branch-length weighted distance over reachable ordered node pairs."""
    if graph.num_nodes < 2:
        raise UndefinedFeatureError("avg_shortest_path_length", "fewer than 2 nodes")
    _, total, reach = paths.sssp_stats(*_csr(graph, graph.branch_lengths))
    n = int(reach.sum())
    if n == 0:
        raise UndefinedFeatureError("avg_shortest_path_length", "no connected node pair")
    return float(total.sum() / n)


# -- geometric -----------------------------------------------------------------

def num_edges(graph: ShapeGraph) -> int:
    return graph.num_edges


def avg_branch_length(graph: ShapeGraph) -> float:
    if graph.num_edges == 0:
        raise UndefinedFeatureError("avg_branch_length", "graph has no edges")
    return float(graph.branch_lengths.mean())


def hull_measure(points: np.ndarray) -> float:
    """Area (2-D) or volume (3-D) of the convex hull of ``points``."""
    d = points.shape[1]
    if len(points) <= d:
        raise DegenerateHullError("branch_density", f"{len(points)} points span no {d}-D hull")
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateHullError("branch_density", "points are not full-dimensional")
    try:
        vol = ConvexHull(points).volume
    except QhullError as exc:
        raise DegenerateHullError("branch_density", f"convex hull failed: {exc}") from None
    if not vol > HULL_EPS:
        raise DegenerateHullError("branch_density", f"hull measure {vol:g} <= {HULL_EPS:g}")
    return float(vol)


def branch_density(graph: ShapeGraph) -> float:
    """Total branch length over the area/volume of the hull of all branch points."""
    if graph.num_edges == 0:
        raise UndefinedFeatureError("branch_density", "graph has no edges")
    pts = np.concatenate(graph.branches, axis=0)
    return float(graph.branch_lengths.sum() / hull_measure(pts))


def branch_bending_energy(points: np.ndarray) -> float:
    """Length-normalised discrete integral of squared curvature along a polyline.

    Interior vertices where the polyline does not turn are dropped first, so
    inserting points on a straight piece leaves the value unchanged.
    Curvature at a remaining interior vertex k uses the centred scheme
    ``2 |u_k - u_{k-1}| / (s_k + s_{k-1})`` with unit segment directions
    ``u`` and segment lengths ``s``; each vertex is weighted by its dual
    length ``(s_k + s_{k-1}) / 2``.
    """
    points = np.asarray(points, dtype=float)
    if len(points) <= 2:
        return 0.0
    seg = np.diff(points, axis=0)
    s = np.sqrt(np.sum(seg * seg, axis=1))
    u = seg / s[:, None]
    turn = np.sqrt(np.sum((u[1:] - u[:-1]) ** 2, axis=1))
    keep = np.concatenate([[True], turn > COLLINEAR_TOL, [True]])
    if not keep[1:-1].any():
        return 0.0
    total = s.sum()
    points = points[keep]
    seg = np.diff(points, axis=0)
    s = np.sqrt(np.sum(seg * seg, axis=1))
    u = seg / s[:, None]
    du = np.sqrt(np.sum((u[1:] - u[:-1]) ** 2, axis=1))
    span = s[1:] + s[:-1]
    kappa = 2.0 * du / span
    return float(np.sum(kappa * kappa * span / 2.0) / total)


def bending_energy(graph: ShapeGraph) -> float:
    """Mean of the per-branch bending energies."""
    if graph.num_edges == 0:
        raise UndefinedFeatureError("bending_energy", "graph has no edges")
    return float(np.mean([branch_bending_energy(b) for b in graph.branches]))


def circuity(graph: ShapeGraph) -> float:
    """Total branch length over total straight edge length."""
    total = graph.edge_lengths.sum() if graph.num_edges else 0.0
    if not total > 0:
        raise UndefinedFeatureError("circuity", "total edge length is zero")
    return float(graph.branch_lengths.sum() / total)


# -- box counting ----------------------------------------------------------------

@dataclass(frozen=True)
class BoxCountSeries:
    """Occupied-box counts over dyadic box sizes.

    ``sizes`` are in world units (descending) and ``cells`` in raster cells;
    ``used`` marks the sizes entering the fit.
    """

    sizes: np.ndarray
    cells: np.ndarray
    counts: np.ndarray
    used: np.ndarray
    slope: float
    intercept: float
    grid: int

    def as_dict(self) -> dict:
        return {
            "grid": self.grid,
            "box_cells": self.cells.tolist(),
            "box_sizes": self.sizes.tolist(),
            "counts": self.counts.tolist(),
            "used": self.used.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
        }


def rasterize(graph: ShapeGraph, grid: Optional[int] = None):
    """Occupied cells of every branch on a cube around the graph's bounding box.

    Returns ``(cells, side)``: unique integer cell coordinates and the cube
    side length in world units.
    """
    d = graph.dim
    G = FRACTAL_GRID[d] if grid is None else int(grid)
    pts = graph.all_points
    if len(pts) == 0:
        raise UndefinedFeatureError("fractal_dimension", "graph has no points")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = float(np.max(hi - lo))
    if not extent > 0:
        raise UndefinedFeatureError("fractal_dimension", "bounding box has zero extent")
    # one cell of padding on each side
    side = extent * G / (G - 2)
    origin = (lo + hi) / 2.0 - side / 2.0
    scale = G / side
    coords = [(b - origin) * scale for b in graph.branches]
    ok = []
    for b in coords:
        m = np.ones(len(b), dtype=bool)
        m[-1] = False
        ok.append(m)
    isolated = np.ones(graph.num_nodes, dtype=bool)
    isolated[graph.edges.ravel()] = False
    if isolated.any():
        iso = (graph.nodes[isolated] - origin) * scale
        coords.append(iso)
        ok.append(np.zeros(len(iso), dtype=bool))
    coords = np.ascontiguousarray(np.concatenate(coords, axis=0))
    ok = np.concatenate(ok)[:-1].copy()
    cells = raster.supercover(coords, ok, G)
    return np.unique(cells, axis=0), side


def box_count(graph: ShapeGraph, grid: Optional[int] = None) -> BoxCountSeries:
    """Box counts for sizes G, G/2, ..., 1 cells and the log-log fit.

    The fit uses sizes with ``1 < N(D) < N(1)`` and requires at least four.
    """
    d = graph.dim
    G = FRACTAL_GRID[d] if grid is None else int(grid)
    cells, side = rasterize(graph, G)
    levels = int(round(math.log2(G)))
    box_cells = np.array([2 ** k for k in range(levels, -1, -1)], dtype=np.int64)
    counts = []
    for k in range(levels, -1, -1):
        coarse = cells >> k
        counts.append(len(np.unique(coarse, axis=0)))
    counts = np.array(counts, dtype=np.int64)
    used = (counts > 1) & (counts < counts[-1])
    sizes = box_cells * (side / G)
    if used.sum() < 4:
        return BoxCountSeries(sizes, box_cells, counts, used, float("nan"), float("nan"), G)
    x = np.log(1.0 / sizes[used])
    y = np.log(counts[used].astype(float))
    slope, intercept = np.polyfit(x, y, 1)
    return BoxCountSeries(sizes, box_cells, counts, used, float(slope), float(intercept), G)


def fractal_dimension(graph: ShapeGraph, grid: Optional[int] = None, series=None) -> float:
    """Box-counting dimension, clamped to ``[0, dim]``."""
    if series is None:
        series = box_count(graph, grid)
    if series.used.sum() < 4:
        raise UndefinedFeatureError(
            "fractal_dimension", f"only {int(series.used.sum())} usable box sizes (need 4)"
        )
    return float(min(max(series.slope, 0.0), graph.dim))


# -- assembly ------------------------------------------------------------------

@dataclass
class FeatureVector:
    """The 19 canonical features of one shape graph.

    ``values`` holds NaN for features that could not be computed; the reason
    is in ``missing``.
    """

    values: np.ndarray
    id: str = ""
    missing: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    names = FEATURE_NAMES

    def __getitem__(self, name):
        return float(self.values[FEATURE_NAMES.index(name)])

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, (float(v) for v in self.values)))

    @property
    def complete(self) -> bool:
        return not self.missing


def extract_features(graph: ShapeGraph) -> FeatureVector:
    """Compute every feature it can; failures become NaN entries with a reason."""
    out = dict.fromkeys(FEATURE_NAMES, float("nan"))
    missing = {}
    meta = {}
    eigs = laplacian_spectrum(graph) if graph.num_nodes else np.zeros(0)

    def attempt(name, fn):
        try:
            out[name] = float(fn())
        except UndefinedFeatureError as exc:
            missing[name] = exc.reason

    attempt("num_edges", lambda: num_edges(graph))
    attempt("mean_betweenness", lambda: mean_betweenness(graph))
    attempt("spectral_entropy", lambda: spectral_entropy(graph, eigs))
    attempt("algebraic_connectivity", lambda: algebraic_connectivity(graph, eigs))
    attempt("assortativity", lambda: assortativity(graph))
    attempt("graph_diameter", lambda: graph_diameter(graph))
    attempt("avg_branch_length", lambda: avg_branch_length(graph))
    attempt("branch_density", lambda: branch_density(graph))
    attempt("bending_energy", lambda: bending_energy(graph))
    attempt("avg_shortest_path_length", lambda: avg_shortest_path_length(graph))
    attempt("circuity", lambda: circuity(graph))
    try:
        series = box_count(graph)
        meta["box_count"] = series.as_dict()
    except UndefinedFeatureError as exc:
        series = None
        missing["fractal_dimension"] = exc.reason
    if series is not None:
        attempt("fractal_dimension", lambda: fractal_dimension(graph, series=series))
    try:
        dirs = directional.directional_features(graph)
    except UndefinedFeatureError as exc:
        for name in DIRECTIONAL_NAMES:
            missing[name] = exc.reason
    else:
        for name in DIRECTIONAL_NAMES:
            out[name] = float(dirs[name])
        meta["mean_direction_unique"] = dirs["_mean_unique"]
        meta["directional_histogram"] = dirs["_histogram"].masses.tolist()
    values = np.array([out[n] for n in FEATURE_NAMES], dtype=float)
    return FeatureVector(values, id=graph.id, missing=missing, meta=meta)


def feature_vector(graph: ShapeGraph) -> FeatureVector:
    """All 19 features; raises :class:`UndefinedFeatureError` naming the failed entry."""
    check(graph)
    if graph.num_edges < 1:
        raise UndefinedFeatureError("num_edges", "graph has no edges")
    fv = extract_features(graph)
    if fv.missing:
        name = next(n for n in FEATURE_NAMES if n in fv.missing)
        err_cls = DegenerateHullError if name == "branch_density" else UndefinedFeatureError
        raise err_cls(name, fv.missing[name])
    return fv
