"""Readers that turn external representations into :class:`ShapeGraph`.

Supported inputs are SWC neuron traces, the JSON shape-graph format and
binary skeleton masks (PNG/PGM), together with the skeleton clean-up rules
used for astrocyte images: fragment pruning and small-component removal or
reconnection.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .core import ShapeGraph, check, connected_components
from .errors import EmptyGraphError, InvalidGraphError, ParseError, SchemaError, StructureError

log = logging.getLogger(__name__)

SOMA, AXON, BASAL, APICAL = 1, 2, 3, 4
DEFAULT_SWC_TYPES = frozenset({1, 3, 4})


# -- SWC -----------------------------------------------------------------------

@dataclass(frozen=True)
class SwcRecord:
    id: int
    type_code: int
    x: float
    y: float
    z: float
    radius: float
    parent: int


def read_swc_records(text: str) -> list:
    records = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ParseError(f"expected 7 columns, found {len(parts)}", lineno)
        try:
            rid, typ = int(parts[0]), int(float(parts[1]))
            x, y, z, r = (float(v) for v in parts[2:6])
            parent = int(parts[6])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if rid in seen:
            raise StructureError(f"line {lineno}: duplicate record id {rid}")
        if parent != -1 and parent not in seen:
            raise StructureError(
                f"line {lineno}: record {rid} references parent {parent} before it is declared"
            )
        seen.add(rid)
        records.append(SwcRecord(rid, typ, x, y, z, r, parent))
    return records


def _compress_tree(points, parent, keep_as_node, dim, id="", label=None):
    """Collapse chains of degree-2 points of a forest into branch polylines.

    ``parent[i]`` is the parent index of point ``i`` (or -1). Nodes of the
    result are the points of degree != 2 plus those flagged in ``keep_as_node``.
    """
    n = len(points)
    adj = [[] for _ in range(n)]
    for i, p in enumerate(parent):
        if p >= 0:
            adj[i].append(p)
            adj[p].append(i)
    is_node = np.array([len(a) != 2 for a in adj], dtype=bool) | np.asarray(keep_as_node, bool)
    node_id = -np.ones(n, dtype=np.int64)
    node_id[is_node] = np.arange(int(is_node.sum()))
    edges, branches = [], []
    visited = set()
    for start in np.flatnonzero(is_node):
        for nb in adj[start]:
            if (start, nb) in visited:
                continue
            chain = [start]
            prev, cur = start, nb
            while not is_node[cur]:
                chain.append(cur)
                a, b = adj[cur]
                prev, cur = cur, (b if a == prev else a)
            chain.append(cur)
            visited.add((chain[-1], chain[-2]))
            visited.add((start, nb))
            edges.append((node_id[start], node_id[cur]))
            branches.append(points[chain])
    # pure cycles cannot occur in a forest, so every chain ends on a node
    nodes = points[is_node] if n else np.zeros((0, dim))
    return ShapeGraph(dim, nodes, edges, branches, id=id, label=label)


def parse_swc(text: str, keep_types: Optional[Iterable[int]] = DEFAULT_SWC_TYPES,
              id: str = "", label: Optional[str] = None) -> ShapeGraph:
    """Parse SWC text into a 3-D shape graph.

    Records whose type is not in ``keep_types`` are dropped with their
    incident segments; their descendants survive as separate components.
    Records at the parent's exact position are merged into the parent. The
    remaining forest is compressed so that nodes are the points of degree
    != 2 (plus type-1 roots) and branches are the chains between them.
    ``keep_types=None`` keeps every record.
    """
    records = read_swc_records(text)
    if keep_types is not None:
        keep_types = set(keep_types)
        if not keep_types:
            raise ValueError("keep_types must be nonempty")
        records = [r for r in records if r.type_code in keep_types]
    index = {r.id: i for i, r in enumerate(records)}
    pts = np.array([[r.x, r.y, r.z] for r in records], dtype=float).reshape(-1, 3)
    parent = np.array([index.get(r.parent, -1) for r in records], dtype=np.int64)
    # merge coincident child/parent points
    rep = np.arange(len(records))
    for i in range(len(records)):
        p = parent[i]
        if p >= 0 and np.array_equal(pts[i], pts[rep[p]]):
            rep[i] = rep[p]
    keep = rep == np.arange(len(records))
    new_index = -np.ones(len(records), dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    new_parent = np.array(
        [new_index[rep[parent[i]]] if parent[i] >= 0 else -1 for i in np.flatnonzero(keep)],
        dtype=np.int64,
    )
    root_soma = np.array(
        [records[i].type_code == SOMA and new_parent[k] < 0
         for k, i in enumerate(np.flatnonzero(keep))],
        dtype=bool,
    )
    graph = _compress_tree(pts[keep], new_parent, root_soma, 3, id=id, label=label)
    return check(graph)


def load_swc(path, keep_types=DEFAULT_SWC_TYPES, label=None) -> ShapeGraph:
    path = Path(path)
    return parse_swc(path.read_text(), keep_types, id=path.stem, label=label)


# -- JSON ----------------------------------------------------------------------

def _points(value, dim, field):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(field, "must be an array of numeric points") from None
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise SchemaError(field, f"points must each have {dim} coordinates")
    return arr


def graph_from_dict(doc: dict) -> ShapeGraph:
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "document must be a JSON object")
    for key in ("dim", "nodes", "edges"):
        if key not in doc:
            raise SchemaError(key, "missing required field")
    dim = doc["dim"]
    if dim not in (2, 3) or isinstance(dim, bool):
        raise SchemaError("dim", f"must be 2 or 3, got {dim!r}")
    gid = doc.get("id", "")
    if not isinstance(gid, str):
        raise SchemaError("id", "must be a string")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise SchemaError("label", "must be a string")
    nodes = _points(doc["nodes"], dim, "nodes") if doc["nodes"] else np.zeros((0, dim))
    if not isinstance(doc["edges"], list):
        raise SchemaError("edges", "must be an array")
    edges, branches = [], []
    for k, e in enumerate(doc["edges"]):
        where = f"edges[{k}]"
        if not isinstance(e, dict):
            raise SchemaError(where, "must be an object with u, v, polyline")
        for key in ("u", "v", "polyline"):
            if key not in e:
                raise SchemaError(f"{where}.{key}", "missing required field")
        u, v = e["u"], e["v"]
        if not all(isinstance(t, int) and not isinstance(t, bool) for t in (u, v)):
            raise SchemaError(f"{where}.u/v", "node indices must be integers")
        if not (0 <= u < len(nodes) and 0 <= v < len(nodes)):
            raise SchemaError(f"{where}.u/v", f"node index out of range ({u}, {v})")
        edges.append((u, v))
        branches.append(_points(e["polyline"], dim, f"{where}.polyline"))
    graph = ShapeGraph(dim, nodes, edges, branches, id=gid, label=label)
    try:
        return check(graph)
    except InvalidGraphError as exc:
        raise SchemaError("edges", "; ".join(exc.problems)) from None


def graph_to_dict(graph: ShapeGraph) -> dict:
    doc = {"dim": graph.dim, "id": graph.id}
    if graph.label is not None:
        doc["label"] = graph.label
    doc["nodes"] = graph.nodes.tolist()
    doc["edges"] = [
        {"u": int(u), "v": int(v), "polyline": b.tolist()}
        for (u, v), b in zip(graph.edges, graph.branches)
    ]
    return doc


def read_graph_json(text: str) -> ShapeGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    return graph_from_dict(doc)


def write_graph_json(graph: ShapeGraph) -> str:
    # float repr is the shortest round-tripping decimal, so reads are exact
    return json.dumps(graph_to_dict(graph), separators=(",", ":"))


def load_graph_json(path) -> ShapeGraph:
    return read_graph_json(Path(path).read_text())


# -- skeleton masks ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SkeletonMask:
    """Binary occupancy grid (rows x columns), True = foreground."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels).astype(bool)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("mask must be a nonempty 2-D array")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, SkeletonMask) and np.array_equal(self.pixels, other.pixels)


def load_mask(path) -> SkeletonMask:
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim == 3:
        arr = arr[..., :3].max(axis=2) if arr.shape[2] >= 3 else arr[..., 0]
    return SkeletonMask(arr != 0)


_EIGHT = np.ones((3, 3), dtype=bool)


def prune_fragments(mask: SkeletonMask, min_pixels: int = 6) -> SkeletonMask:
    """Remove 8-connected foreground components with fewer than ``min_pixels`` pixels."""
    lab, n = ndimage.label(mask.pixels, structure=_EIGHT)
    if n == 0:
        return mask
    sizes = np.bincount(lab.ravel())
    small = sizes < min_pixels
    small[0] = True
    return SkeletonMask(~small[lab])


_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def pixel_adjacency(px: np.ndarray) -> dict:
    """8-neighbour adjacency with redundant diagonal links removed.

    A diagonal link is dropped when a pixel 4-adjacent to both ends is
    foreground, so staircases and junction corners do not form triangles.
    """
    H, W = px.shape
    fg = {(int(r), int(c)) for r, c in zip(*np.nonzero(px))}
    adj = {p: [] for p in sorted(fg)}
    for (r, c) in adj:
        for dr, dc in _OFFSETS:
            q = (r + dr, c + dc)
            if q not in fg:
                continue
            if dr and dc and ((r + dr, c) in fg or (r, c + dc) in fg):
                continue
            adj[(r, c)].append(q)
    return adj


def _pixel_point(p):
    return (float(p[1]), float(p[0]))


def skeleton_to_graph(mask: SkeletonMask, id: str = "", label: Optional[str] = None) -> ShapeGraph:
    """Convert a 1-pixel-wide skeleton to a 2-D shape graph in pixel coordinates.

    Nodes are the pixels whose pixel-degree differs from 2; branches follow
    chains of degree-2 pixels (coordinates are ``(column, row)`` pixel
    centres). Loops are cut so the result has neither self-loops nor
    parallel edges: an isolated cycle gets an anchor pixel plus two cut
    pixels at a third and two thirds of its length, a loop returning to its
    starting node is cut likewise, and of two chains between the same pair
    of nodes one that is not a direct pixel link is cut at its middle pixel.
    """
    if not mask.pixels.any():
        raise EmptyGraphError("skeleton mask has no foreground pixels")
    adj = pixel_adjacency(mask.pixels)
    is_node = {p: len(n) != 2 for p, n in adj.items()}
    node_pixels = [p for p in adj if is_node[p]]
    nid = {p: k for k, p in enumerate(node_pixels)}
    nodes = [_pixel_point(p) for p in node_pixels]
    edges = []
    chains = []
    pairs = {}
    used = set()
    visited = set()

    def add_node(p):
        nid[p] = len(nodes)
        nodes.append(_pixel_point(p))
        return nid[p]

    def emit(chain):
        a, b = nid[chain[0]], nid[chain[-1]]
        edges.append((a, b))
        pairs[(min(a, b), max(a, b))] = len(chains)
        chains.append(chain)

    def emit_cut(chain, cuts):
        """Split ``chain`` at interior positions ``cuts`` (creating nodes)."""
        for k in cuts:
            if chain[k] not in nid:
                add_node(chain[k])
        bounds = [0, *cuts, len(chain) - 1]
        for s, t in zip(bounds[:-1], bounds[1:]):
            emit(chain[s:t + 1])

    def walk(start, nb):
        chain = [start, nb]
        used.add((start, nb))
        prev, cur = start, nb
        while not is_node[cur]:
            a, b = adj[cur]
            nxt = b if a == prev else a
            chain.append(nxt)
            prev, cur = cur, nxt
        used.add((chain[-1], chain[-2]))
        visited.update(chain)
        return chain

    for start in node_pixels:
        for nb in adj[start]:
            if (start, nb) in used:
                continue
            chain = walk(start, nb)
            a, b = nid[chain[0]], nid[chain[-1]]
            m = len(chain)
            if a == b:
                emit_cut(chain, [m // 3, (2 * m) // 3])
            elif (min(a, b), max(a, b)) in pairs:
                if m == 2:
                    # a direct link found after a longer parallel chain: cut the longer one
                    k = pairs.pop((min(a, b), max(a, b)))
                    longer = chains[k]
                    edges[k] = None
                    emit(chain)
                    emit_cut(longer, [len(longer) // 2])
                else:
                    emit_cut(chain, [m // 2])
            else:
                emit(chain)

    # isolated cycles: every pixel has degree 2 and none was visited
    for p in adj:
        if is_node[p] or p in visited:
            continue
        anchor = p
        add_node(anchor)
        is_node[anchor] = True
        chain = walk(anchor, adj[anchor][0])
        is_node[anchor] = False
        m = len(chain)  # closed: chain[-1] == anchor
        emit_cut(chain, [m // 3, (2 * m) // 3])

    keep = [k for k, e in enumerate(edges) if e is not None]
    edges = [edges[k] for k in keep]
    branches = [np.array([_pixel_point(p) for p in chains[k]]) for k in keep]
    return check(ShapeGraph(2, np.array(nodes).reshape(-1, 2), edges, branches, id=id, label=label))


def rasterize_graph(graph: ShapeGraph, shape) -> np.ndarray:
    """Foreground mask of every polyline point (pixel-resolution check helper)."""
    out = np.zeros(shape, dtype=bool)
    pts = graph.all_points
    if len(pts):
        cols = np.rint(pts[:, 0]).astype(int)
        rows = np.rint(pts[:, 1]).astype(int)
        out[rows, cols] = True
    return out


# -- component cleaning ---------------------------------------------------------

class _Editable:
    """Mutable edge/branch lists used while splicing components together."""

    def __init__(self, graph):
        self.nodes = [p.copy() for p in graph.nodes]
        self.edges = [(int(u), int(v)) for u, v in graph.edges]
        self.branches = [b.copy() for b in graph.branches]

    def points(self, members):
        """Polyline points (and isolated nodes) of the given node set, with owners."""
        members = set(members)
        pts, owner = [], []
        touched = set()
        for e, (u, v) in enumerate(self.edges):
            if u in members:
                touched.update((u, v))
                for k, p in enumerate(self.branches[e]):
                    pts.append(p)
                    owner.append((e, k))
        for v in sorted(members - touched):
            pts.append(self.nodes[v])
            owner.append((-1, v))
        return np.array(pts), owner

    def node_at(self, owner):
        """Node index for a located point, splitting its branch if interior."""
        e, k = owner
        if e < 0:
            return k
        b = self.branches[e]
        u, v = self.edges[e]
        if k == 0:
            return u
        if k == len(b) - 1:
            return v
        self.nodes.append(b[k].copy())
        w = len(self.nodes) - 1
        self.edges[e] = (u, w)
        self.branches[e] = b[: k + 1]
        self.edges.append((w, v))
        self.branches.append(b[k:])
        return w


def clean_components(graph: ShapeGraph, ratio: float = 0.05, reconnect_dist: float = 6.0) -> ShapeGraph:
    """Drop or reconnect components smaller than the largest one.

    Component size is total branch length. Components below ``ratio`` times
    the largest size are removed. Each remaining component is joined to the
    largest by a straight branch between the closest pair of polyline points
    when their distance is at most ``reconnect_dist`` and discarded otherwise.
    An attachment point inside a branch splits that branch.
    """
    comps = connected_components(graph)
    if len(comps) <= 1:
        return graph
    comp_of = np.empty(graph.num_nodes, dtype=np.int64)
    for c, members in enumerate(comps):
        comp_of[members] = c
    size = np.zeros(len(comps))
    if graph.num_edges:
        np.add.at(size, comp_of[graph.edges[:, 0]], graph.branch_lengths)
    big = int(np.argmax(size)) if size.max() > 0 else int(np.argmax([len(c) for c in comps]))

    g = _Editable(graph)
    main = set(comps[big])
    order = sorted((c for c in range(len(comps)) if c != big), key=lambda c: (-size[c], c))
    for c in order:
        if size[c] < ratio * size[big]:
            continue
        main_pts, main_owner = g.points(main)
        pts, owner = g.points(comps[c])
        dist, idx = cKDTree(main_pts).query(pts)
        j = int(np.argmin(dist))
        if dist[j] > reconnect_dist:
            continue
        n_before = len(g.nodes)
        a = g.node_at(main_owner[int(idx[j])])
        # splitting a main branch appends edges owned by main, so the
        # other component's owners stay valid
        b = g.node_at(owner[j])
        main.update(comps[c])
        main.update(range(n_before, len(g.nodes)))
        if dist[j] > 0:
            g.edges.append((a, b))
            g.branches.append(np.stack([g.nodes[a], g.nodes[b]]))
        else:
            g.edges = [(a if u == b else u, a if v == b else v) for u, v in g.edges]
            main.discard(b)
    keep = sorted(main)
    remap = {v: k for k, v in enumerate(keep)}
    out_edges, out_branches = [], []
    for (u, v), b in zip(g.edges, g.branches):
        if u in remap and v in remap:
            out_edges.append((remap[u], remap[v]))
            out_branches.append(b)
    nodes = np.array([g.nodes[v] for v in keep]).reshape(-1, graph.dim)
    return check(graph.replace(nodes=nodes, edges=out_edges, branches=out_branches))


def load_graph(path, fmt: str, keep_types=DEFAULT_SWC_TYPES, clean: Optional[bool] = None,
               label=None) -> ShapeGraph:
    """Read one file in ``fmt`` (``swc``, ``json`` or ``mask``)."""
    path = Path(path)
    if fmt == "swc":
        g = load_swc(path, keep_types, label=label)
    elif fmt == "json":
        g = load_graph_json(path)
        if label is not None and g.label is None:
            g = g.replace(label=label)
    elif fmt == "mask":
        mask = prune_fragments(load_mask(path))
        g = skeleton_to_graph(mask, id=path.stem, label=label)
        clean = True if clean is None else clean
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if clean:
        g = clean_components(g)
    return g
