import json
import logging

import numpy as np

from enum import IntEnum
from scipy.sparse.csgraph import connected_components
from typing import Any, Dict, List, Optional, Sequence

from IGCoreset.Core import (DecompositionError, DisconnectedError, InvalidParameterError, InvariantViolationError,
                            get_logger)
from IGCoreset.Graphs import TIE_TOL, DistTable, GraphInstance, PropertyReport, shortest_paths
from IGCoreset.Separators import B_MAX, SeparatorResult, sp_separator
from IGCoreset.Spanners import family_spanner


class RegionKind(IntEnum):
    """How a region was created.

    Values are::

        ROOT = 0       # The whole vertex set.
        COMPONENT = 1  # A connected component left after removing the parent's separator paths.
        SUBPATH = 2    # A piece of one separator path with at most two marked vertices.
    """
    ROOT = 0
    COMPONENT = 1
    SUBPATH = 2


class Region:
    """A node of the decomposition tree.

    Attributes
    ----------
    id : int
        Region id. Parents have smaller ids than their children.
    vertices : numpy.ndarray
        Sorted vertex indices of the host graph.
    kind : RegionKind
        How the region was created.
    parent : int
        Parent id, ``-1`` for the root.
    depth : int
        Distance from the root.
    children : List[int]
        Child ids. Component children come first, then subpath children in path order.
    separator : Optional[SeparatorResult]
        The separator of an internal region, with paths in host vertex indices.
    spanner : Optional[PlanarSpanner]
        Planar spanner of ``G[vertices]`` in local indices, for internal regions that were separated.
    marked : int
        Number of marked vertices in the region.
    """

    __slots__ = ['id', 'vertices', 'kind', 'parent', 'depth', 'children', 'separator', 'spanner', 'marked',
                 'path_index', '_graph']

    def __init__(self, id: int, vertices: np.ndarray, kind: RegionKind, parent: int, depth: int, marked: int,
                 path_index: int = -1):
        self.id = id
        self.vertices = np.asarray(vertices, dtype=np.int64)
        self.kind = kind
        self.parent = parent
        self.depth = depth
        self.children = []
        self.separator = None
        self.spanner = None
        self.marked = marked
        self.path_index = path_index
        self._graph = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __len__(self) -> int:
        return len(self.vertices)

    def contains(self, v: int) -> bool:
        idx = np.searchsorted(self.vertices, v)
        return idx < len(self.vertices) and self.vertices[idx] == v

    def contains_all(self, vs: Sequence[int]) -> bool:
        vs = np.asarray(vs, dtype=np.int64)
        idx = np.minimum(np.searchsorted(self.vertices, vs), len(self.vertices) - 1)
        return bool(np.all(self.vertices[idx] == vs))

    def local(self, v: int) -> int:
        """Index of host vertex ``v`` inside the region.

        Raises
        ------
        KeyError
            If ``v`` is not in the region.
        """
        if not self.contains(v):
            raise KeyError(f'Vertex {v} is not in region {self.id}.')
        return int(np.searchsorted(self.vertices, v))

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'id': self.id,
            'kind': self.kind.name.lower(),
            'parent': self.parent,
            'depth': self.depth,
            'size': len(self.vertices),
            'marked': self.marked,
            'children': list(self.children),
            'leaf': self.is_leaf,
        }
        if self.separator is not None:
            data['separator'] = self.separator.to_dict()
        return data

    def __repr__(self) -> str:
        return f'Region(id={self.id}, kind={self.kind.name}, size={len(self.vertices)}, marked={self.marked})'


class DecompTree:
    """Recursive decomposition of a graph guided by shortest-path separators of planar spanners.

    Attributes
    ----------
    graph : GraphInstance
        The host graph ``G``.
    regions : List[Region]
        Regions indexed by id. ``regions[0]`` is the root.
    marked : numpy.ndarray
        The sorted marked vertex set ``X``.
    """

    __slots__ = ['graph', 'regions', 'marked']

    def __init__(self, graph: GraphInstance, regions: List[Region], marked: np.ndarray):
        self.graph = graph
        self.regions = regions
        self.marked = marked

    @property
    def root(self) -> Region:
        return self.regions[0]

    @property
    def depth(self) -> int:
        return max(r.depth for r in self.regions)

    def __len__(self) -> int:
        return len(self.regions)

    def __getitem__(self, rid: int) -> Region:
        return self.regions[rid]

    def leaves(self) -> List[Region]:
        return [r for r in self.regions if r.is_leaf]

    def region_graph(self, rid: int) -> GraphInstance:
        """``G_i = G[R_i]`` in region-local indices, built once and cached on the region."""
        region = self.regions[rid]
        if region._graph is None:
            region._graph = self.graph.induced(region.vertices)
        return region._graph

    def level_stats(self) -> List[Dict[str, Any]]:
        """Per-depth region count, largest region and worst separator balance."""
        rows = []
        for depth in range(self.depth + 1):
            level = [r for r in self.regions if r.depth == depth]
            balances = [r.separator.balance for r in level if r.separator is not None]
            rows.append({
                'depth': depth,
                'regions': len(level),
                'max_size': max(len(r) for r in level),
                'max_marked': max(r.marked for r in level),
                'max_balance': max(balances) if balances else None,
            })
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.graph.n,
            'metric': self.graph.metric.label,
            'marked': self.marked.tolist(),
            'depth': self.depth,
            'levels': self.level_stats(),
            'regions': [r.to_dict() for r in self.regions],
        }

    def dump(self, path: str):
        with open(path, 'w') as json_file:
            json.dump(self.to_dict(), json_file, indent=1)

    def __repr__(self) -> str:
        return f'DecompTree(regions={len(self.regions)}, depth={self.depth}, marked={len(self.marked)})'


def split_path(path: Sequence[int], is_marked: np.ndarray) -> List[List[int]]:
    """Breaks ``path`` at its marked vertices into pieces with at most two marked vertices each.

    Consecutive pieces share their marked endpoint. Single-vertex pieces at either end are dropped unless the path
    itself is a single vertex. A path with no marked vertex is returned whole.
    """
    path = list(path)
    positions = [i for i, v in enumerate(path) if is_marked[v]]
    if not positions:
        return [path]
    breaks = [0] + positions + [len(path) - 1]
    pieces = [path[a:b + 1] for a, b in zip(breaks, breaks[1:]) if b > a]
    return pieces if pieces else [path]


def build_tree(g: GraphInstance, X: Sequence[int], b_max: int = B_MAX,
               logger: Optional[logging.Logger] = None) -> DecompTree:
    """Builds the recursive decomposition of ``g`` guided by the marked set ``X``.

    A region with at most two marked vertices is a leaf. A disconnected region is split into its components. Any
    other region builds the planar spanner ``H_i`` of ``G[R_i]``, separates it with shortest paths, and gets one
    component child per connected component of ``H_i`` minus the paths plus one subpath child per piece of each path::

        tree = build_tree(g, X)
        chain = root_leaf_path(tree, s)

    Parameters
    ----------
    g : GraphInstance
        The host graph.
    X : Sequence[int]
        Marked vertex indices.
    b_max : int
        Largest number of paths per separator. Defaults to ``2``.
    logger : Optional[logging.Logger]
        Logger for split diagnostics. Defaults to the package logger.

    Returns
    -------
    DecompTree
        The tree.

    Raises
    ------
    InvalidParameterError
        If ``X`` holds a vertex outside ``g``.
    DecompositionError
        If the spanner of a connected region is disconnected.
    """
    logger = get_logger(logger)
    X = np.unique(np.asarray(X, dtype=np.int64))
    if len(X) and (X[0] < 0 or X[-1] >= g.n):
        raise InvalidParameterError('X', X.tolist(), f'Marked vertices must lie in 0..{g.n - 1}.')
    is_marked = np.zeros(g.n, dtype=bool)
    is_marked[X] = True
    regions = [Region(0, np.arange(g.n), RegionKind.ROOT, -1, 0, len(X))]

    def add_child(parent: Region, vertices: np.ndarray, kind: RegionKind, path_index: int = -1) -> Region:
        vertices = np.unique(vertices)
        child = Region(len(regions), vertices, kind, parent.id, parent.depth + 1, int(is_marked[vertices].sum()),
                       path_index)
        regions.append(child)
        parent.children.append(child.id)
        return child

    stack = [regions[0]]
    while stack:
        region = stack.pop()
        if region.marked <= 2:
            continue
        verts = region.vertices
        sub = g.induced(verts)
        count, labels = sub.components()
        if count > 1:
            order = sorted(range(count), key=lambda c: int(np.argmax(labels == c)))
            children = [add_child(region, verts[labels == c], RegionKind.COMPONENT) for c in order]
            logger.debug('Region %d is disconnected, split into %d components.', region.id, count)
            stack.extend(reversed(children))
            continue
        spanner = family_spanner(sub)
        if spanner.graph.components()[0] > 1:
            raise DecompositionError(region.id, 'the planar spanner disconnects a connected region.')
        sep = sp_separator(spanner, is_marked[verts].astype(float), b_max, logger)
        region.spanner = spanner
        region.separator = SeparatorResult([verts[p].tolist() for p in sep.paths], sep.balance, int(verts[sep.root]),
                                           sep.total)
        keep = np.ones(len(verts), dtype=bool)
        keep[sep.vertices()] = False
        children = []
        if np.any(keep):
            idx = np.nonzero(keep)[0]
            ccount, clabels = connected_components(spanner.graph.csr[idx][:, idx], directed=False)
            order = sorted(range(ccount), key=lambda c: int(np.argmax(clabels == c)))
            children.extend(add_child(region, verts[idx[clabels == c]], RegionKind.COMPONENT) for c in order)
        for j, path in enumerate(region.separator.paths):
            for piece in split_path(path, is_marked):
                children.append(add_child(region, np.asarray(piece), RegionKind.SUBPATH, j))
        logger.info('Region %d (%d vertices, %d marked) split by %d path(s) into %d children, balance %.3f.',
                    region.id, len(verts), region.marked, sep.b, len(children), sep.balance)
        stack.extend(reversed(children))
    tree = DecompTree(g, regions, X)
    logger.info('Decomposition of %d vertices with %d marked has %d regions and depth %d.', g.n, len(X),
                len(regions), tree.depth)
    return tree


def root_leaf_path(tree: DecompTree, s: int) -> List[Region]:
    """Returns the chain ``R_1, ..., R_t`` of regions containing ``s`` from the root to a leaf. Where ``s`` lies in
    several children the one with the smallest id is followed.

    Raises
    ------
    IndexError
        If ``s`` is not a vertex.
    """
    if not 0 <= s < tree.graph.n:
        raise IndexError(f'Vertex {s} is not in a graph with {tree.graph.n} vertices.')
    chain = [tree.root]
    while not chain[-1].is_leaf:
        chain.append(next(tree[c] for c in sorted(chain[-1].children) if tree[c].contains(s)))
    return chain


class SeparationRecord:
    """Where a fixed shortest path ``pi_G(p, s)`` is cut by a separator.

    Attributes
    ----------
    p, s : int
        The pair.
    same_leaf : bool
        ``True`` when the lowest region containing the path is a leaf. The other fields then describe that leaf.
    region : int
        Id of the lowest region ``R_i`` on ``s``'s chain containing the whole path.
    level : int
        Position of ``R_i`` in ``root_leaf_path(tree, s)``.
    path_index : int
        Index ``j`` of the separator path ``P_ij`` holding ``x``.
    x, u, v : int
        ``u`` is the last vertex of the path inside ``p``'s child, ``v`` its successor and ``x`` the first vertex of
        ``pi_{H_i}(u, v)`` on a separator path.
    path : List[int]
        The canonical path ``pi_G(p, s)``.
    d_g, d_gi : float
        ``d_G(p, s)`` and ``d_{G_i}(p, s)``.
    d_g_uv, d_h_uv, d_h_ux, d_h_xv : float
        ``d_G(u, v)``, ``d_{H_i}(u, v)``, ``d_{H_i}(u, x)`` and ``d_{H_i}(x, v)``.
    """

    __slots__ = ['p', 's', 'same_leaf', 'region', 'level', 'path_index', 'x', 'u', 'v', 'path', 'd_g', 'd_gi',
                 'd_g_uv', 'd_h_uv', 'd_h_ux', 'd_h_xv']

    def __init__(self, p: int, s: int, same_leaf: bool, region: int, level: int, path: List[int], d_g: float,
                 d_gi: float):
        self.p = p
        self.s = s
        self.same_leaf = same_leaf
        self.region = region
        self.level = level
        self.path = path
        self.d_g = d_g
        self.d_gi = d_gi
        self.path_index = self.x = self.u = self.v = -1
        self.d_g_uv = self.d_h_uv = self.d_h_ux = self.d_h_xv = 0.0

    def __repr__(self) -> str:
        if self.same_leaf:
            return f'SeparationRecord(p={self.p}, s={self.s}, same-leaf={self.region})'
        return f'SeparationRecord(p={self.p}, s={self.s}, region={self.region}, x={self.x}, u={self.u}, v={self.v})'


def separating_vertex(tree: DecompTree, p: int, s: int, table: Optional[DistTable] = None) -> SeparationRecord:
    """Locates the separator that cuts the canonical shortest path from ``p`` to ``s``.

    Parameters
    ----------
    tree : DecompTree
        The decomposition.
    p, s : int
        Vertices of the host graph.
    table : Optional[DistTable]
        ``shortest_paths(tree.graph, p)`` if already computed. Defaults to ``None``.

    Returns
    -------
    SeparationRecord
        The record. ``same_leaf`` is set when ``p = s`` or the whole path lies in one leaf.

    Raises
    ------
    DisconnectedError
        If ``p`` and ``s`` are not connected.
    InvariantViolationError
        If the path leaves ``p``'s child without meeting a separator.
    """
    g = tree.graph
    table = shortest_paths(g, p) if table is None else table
    path = table.path_to(s)
    if not path:
        raise DisconnectedError(p, s, 'No separating vertex exists.')
    chain = root_leaf_path(tree, s)
    level = max(i for i, r in enumerate(chain) if r.contains_all(path))
    region = chain[level]
    gi = tree.region_graph(region.id)
    d_g = float(table.dist[s])
    d_gi = gi.oracle(region.local(p), region.local(s))
    record = SeparationRecord(p, s, region.is_leaf, region.id, level, path, d_g, d_gi)
    if region.is_leaf:
        return record

    s_child = chain[level + 1].id
    holding = [c for c in region.children if tree[c].contains(p)]
    other = [c for c in holding if c != s_child]
    child = tree[min(other) if other else min(holding)]
    pos = next((k for k, y in enumerate(path) if not child.contains(y)), None)
    if pos is None:
        # p and s share a subpath child other than the one followed from the root.
        record.same_leaf, record.region = True, child.id
        return record
    u, v = path[pos - 1], path[pos]

    hi = region.spanner.graph
    lu, lv = region.local(u), region.local(v)
    h_table = shortest_paths(hi, lu)
    h_path = region.vertices[h_table.path_to(lv)].tolist()
    on_path = {}
    for j, sep_path in enumerate(region.separator.paths):
        for y in sep_path:
            on_path.setdefault(y, j)
    x = next((y for y in h_path if y in on_path), None)
    if x is None:
        raise InvariantViolationError('separating-vertex', f'pi_H({u}, {v}) in region {region.id} meets no separator.')
    record.x, record.u, record.v, record.path_index = x, u, v, on_path[x]
    record.d_g_uv = g.oracle(u, v)
    record.d_h_uv = float(h_table.dist[lv])
    record.d_h_ux = float(h_table.dist[region.local(x)])
    record.d_h_xv = hi.oracle(region.local(x), lv)
    return record


def check_separation_claims(tree: DecompTree, records: Sequence[SeparationRecord], eps: float, q: float = 1.0,
                            tol: float = 1e-9) -> PropertyReport:
    """Checks every non-leaf record for the separating-path properties.

    * ``d_{G_i}(p, s) = d_G(p, s)``,
    * ``d_{H_i}(u, v) <= alpha_i * d_G(u, v)``,
    * ``d_{H_i}(u, x) + d_{H_i}(x, v) = d_{H_i}(u, v)``,
    * when ``pi_G(p, s)`` has at least ``q * alpha * c2' / (c1' * eps)`` hops, ``d_{H_i}(u, v) <= (eps/q) d_G(p, s)``.
    """
    report = PropertyReport('separating-paths')
    metric = tree.graph.metric
    for rec in records:
        if rec.same_leaf:
            continue
        report.checked += 1
        alpha = tree[rec.region].spanner.alpha
        slack = tol * max(1.0, rec.d_g)
        if abs(rec.d_gi - rec.d_g) > slack:
            report.violations.append(('region-distance', rec.p, rec.s, rec.d_gi, rec.d_g))
        if rec.d_h_uv > alpha * rec.d_g_uv + slack:
            report.violations.append(('spanner-stretch', rec.u, rec.v, rec.d_h_uv, rec.d_g_uv))
        if abs(rec.d_h_ux + rec.d_h_xv - rec.d_h_uv) > TIE_TOL * 10 * max(1.0, rec.d_h_uv):
            report.violations.append(('x-split', rec.u, rec.x, rec.v))
        hops = len(rec.path) - 1
        if hops >= q * alpha * metric.c2p / (metric.c1p * eps) and rec.d_h_uv > (eps / q) * rec.d_g + slack:
            report.violations.append(('long-path', rec.p, rec.s, rec.d_h_uv, rec.d_g))
    return report


def check_tree(tree: DecompTree) -> PropertyReport:
    """Checks the structural properties of a decomposition.

    Leaves hold at most two marked vertices, an internal region is the union of its children, component children are
    disjoint and avoid the separator, subpath children hold at most two marked vertices and every vertex reaches a
    leaf.
    """
    report = PropertyReport('decomposition')
    marked = np.zeros(tree.graph.n, dtype=bool)
    marked[tree.marked] = True
    for region in tree.regions:
        report.checked += 1
        if region.is_leaf:
            if region.marked > 2:
                report.violations.append(('leaf-marked', region.id, region.marked))
            continue
        kids = [tree[c] for c in region.children]
        union = np.unique(np.concatenate([k.vertices for k in kids]))
        if not np.array_equal(union, region.vertices):
            report.violations.append(('union', region.id))
        comps = [k for k in kids if k.kind == RegionKind.COMPONENT]
        if comps:
            joined = np.concatenate([k.vertices for k in comps])
            if len(np.unique(joined)) != len(joined):
                report.violations.append(('component-overlap', region.id))
            if region.separator is not None and np.any(np.isin(joined, region.separator.vertices())):
                report.violations.append(('component-separator', region.id))
        for k in kids:
            if k.kind == RegionKind.SUBPATH and int(marked[k.vertices].sum()) > 2:
                report.violations.append(('subpath-marked', k.id, k.marked))
    return report
