import heapq
import json
import math

import networkx as nx
import numpy as np

from enum import IntEnum
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from IGCoreset.Core import InvalidParameterError
from IGCoreset.Geometry import L2, LINF, SQRT2, MuNet, NormKind, PointSet, mu_net, pairwise

# Relative tolerance for treating two path weights as equal.
TIE_TOL = 1e-12


class Family(IntEnum):
    """Enum of the supported intersection-graph families.

    Values are::

        UDG = 0      # Unit-disk graph, edge iff l2 <= 2.
        USG = 1      # Unit-square graph, edge iff linf <= 2.
        HOP_UDG = 2  # Unit-disk graph with hop distances.
    """
    UDG = 0
    USG = 1
    HOP_UDG = 2


class MetricKind:
    """A graph family, its weight norm and its Locally Euclidean constants.

    ``c1`` and ``c2`` are the adjacency thresholds on the Euclidean distance, ``c3`` and ``c4`` bound each edge weight
    against the Euclidean length of the edge. ``c1p = c1*c3/3`` lower-bounds the distance per hop of a minimum-hop
    shortest path and ``c2p = c2*c4`` bounds every edge weight.

    Metric kinds are usually parsed from their CLI labels::

        MetricKind.parse('udg-l2')
        MetricKind.parse('usg-linf')
        MetricKind.parse('hop-udg')

    Attributes
    ----------
    family : Family
        The graph family.
    norm : NormKind
        The weight norm. Ignored for ``HOP_UDG``.
    c1, c2, c3, c4, c1p, c2p : float
        The constants.
    """

    __slots__ = ['family', 'norm', 'c1', 'c2', 'c3', 'c4', 'c1p', 'c2p']

    def __init__(self, family: Family, norm: NormKind = L2):
        self.family = Family(family)
        self.norm = L2 if self.family == Family.HOP_UDG else norm
        if self.family == Family.HOP_UDG:
            self.c1, self.c2, self.c3, self.c4 = 2.0, 2.0, 1.0, 1.0
            self.c1p, self.c2p = 1.0, 1.0
            return
        if self.family == Family.UDG:
            self.c1, self.c2 = 2.0, 2.0
        else:
            self.c1, self.c2 = SQRT2, 2.0 * SQRT2
        self.c3, self.c4 = self.norm.l2_distortion()
        self.c1p = self.c1 * self.c3 / 3.0
        self.c2p = self.c2 * self.c4

    @staticmethod
    def parse(label: Union[str, 'MetricKind']) -> 'MetricKind':
        """Parses labels such as ``udg-l2``, ``udg-l1``, ``udg-linf``, ``usg-linf``, ``usg-l2`` and ``hop-udg``.

        Raises
        ------
        InvalidParameterError
            If ``label`` is not recognised.
        """
        if isinstance(label, MetricKind):
            return label
        key = label.strip().lower()
        if key in ('hop-udg', 'hop_udg', 'hop'):
            return MetricKind(Family.HOP_UDG)
        family, _, norm = key.partition('-')
        if family not in ('udg', 'usg'):
            raise InvalidParameterError('metric', label, 'Expected udg-<norm>, usg-<norm> or hop-udg.')
        default = L2 if family == 'udg' else LINF
        return MetricKind(Family.UDG if family == 'udg' else Family.USG, NormKind.parse(norm) if norm else default)

    @property
    def label(self) -> str:
        if self.family == Family.HOP_UDG:
            return 'hop-udg'
        return f'{self.family.name.lower()}-{self.norm.label}'

    @property
    def weighted(self) -> bool:
        return self.family != Family.HOP_UDG

    @property
    def spread(self) -> float:
        """Euclidean extent of one unit of graph distance."""
        return 2.0 if self.family == Family.HOP_UDG else 1.0 / self.c3

    def adjacent(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        """Vectorised adjacency predicate on coordinate differences."""
        if self.family == Family.USG:
            return LINF.of(dx, dy) <= 2.0
        return L2.of(dx, dy) <= 2.0

    def weight(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        if self.family == Family.HOP_UDG:
            return np.ones(np.shape(dx))
        return self.norm.of(dx, dy)

    def __eq__(self, other) -> bool:
        return isinstance(other, MetricKind) and self.family == other.family and self.norm == other.norm

    def __hash__(self) -> int:
        return hash((self.family, self.norm))

    def __repr__(self) -> str:
        return f'MetricKind({self.label})'


class GraphInstance:
    """An undirected weighted intersection graph over a ``PointSet``.

    Vertices are the positions ``0..n-1`` of the point set. Induced subgraphs keep a reference to the vertex of the
    graph they were taken from through ``origin`` so regions of a decomposition can translate back to global vertices.

    Attributes
    ----------
    points : PointSet
        The embedding.
    metric : MetricKind
        Family, weight norm and constants.
    csr : scipy.sparse.csr_matrix
        Symmetric weighted adjacency matrix.
    origin : numpy.ndarray
        For every vertex, its index in the root graph.
    """

    __slots__ = ['points', 'metric', 'csr', 'origin', '_adj', '_oracle']

    def __init__(self, points: PointSet, metric: MetricKind, u: np.ndarray, v: np.ndarray, w: np.ndarray,
                 origin: Optional[np.ndarray] = None):
        n = len(points)
        u, v, w = np.asarray(u, dtype=np.int64), np.asarray(v, dtype=np.int64), np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise ValueError('Edge weights must be positive. Coincident points are not supported.')
        if np.any(u == v):
            raise ValueError('Self loops are not allowed.')
        self.points = points
        self.metric = metric
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        self.csr = csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))
        self.csr.sum_duplicates()
        self.csr.sort_indices()
        self.origin = np.arange(n, dtype=np.int64) if origin is None else np.asarray(origin, dtype=np.int64)
        self._adj = None
        self._oracle = None

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return self.csr.nnz // 2

    def __len__(self) -> int:
        return self.n

    def edges(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns ``(u, v, w)`` arrays with ``u < v``, in row-major order."""
        coo = self.csr.tocoo()
        keep = coo.row < coo.col
        return coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64), coo.data[keep]

    @property
    def adjacency(self) -> List[List[Tuple[int, float]]]:
        """Adjacency lists ``adj[u] = [(v, w), ...]`` sorted by neighbour."""
        if self._adj is None:
            indptr, indices, data = self.csr.indptr, self.csr.indices, self.csr.data
            self._adj = [list(zip(indices[indptr[u]:indptr[u + 1]].tolist(), data[indptr[u]:indptr[u + 1]].tolist()))
                         for u in range(self.n)]
        return self._adj

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def has_edge(self, u: int, v: int) -> bool:
        return self.csr[u, v] > 0

    def edge_weight(self, u: int, v: int) -> float:
        """Returns the weight of edge ``uv``.

        Raises
        ------
        KeyError
            If ``uv`` is not an edge.
        """
        w = self.csr[u, v]
        if w <= 0:
            raise KeyError(f'({u}, {v}) is not an edge.')
        return float(w)

    def components(self) -> Tuple[int, np.ndarray]:
        """Returns ``(count, labels)`` of the connected components."""
        count, labels = connected_components(self.csr, directed=False)
        return int(count), labels

    @property
    def oracle(self) -> 'DistanceOracle':
        if self._oracle is None:
            self._oracle = DistanceOracle(self)
        return self._oracle

    def induced(self, vertices: Sequence[int]) -> 'GraphInstance':
        """Returns ``G[vertices]`` with vertices renumbered in increasing order. ``origin`` maps back to the root."""
        vertices = np.unique(np.asarray(vertices, dtype=np.int64))
        sub = self.csr[vertices][:, vertices].tocoo()
        keep = sub.row < sub.col
        return GraphInstance(self.points.subset(vertices), self.metric, sub.row[keep], sub.col[keep], sub.data[keep],
                             origin=self.origin[vertices])

    def with_edges(self, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> 'GraphInstance':
        """Returns a graph over the same points with a different edge set."""
        return GraphInstance(self.points, self.metric, u, v, w, origin=self.origin)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        u, v, w = self.edges()
        graph.add_weighted_edges_from(zip(u.tolist(), v.tolist(), w.tolist()))
        return graph

    def to_dict(self) -> Dict[str, Any]:
        u, v, w = self.edges()
        return {
            'n': self.n,
            'metric': self.metric.label,
            'ids': self.points.ids.tolist(),
            'edges': [[int(a), int(b), float(c)] for a, b, c in zip(u, v, w)],
        }

    def dump(self, path: str, **extra):
        """Writes the graph dump format ``{n, metric, ids, edges: [[u, v, w], ...]}`` plus ``extra`` fields."""
        data = self.to_dict()
        data.update(extra)
        with open(path, 'w') as json_file:
            json.dump(data, json_file, indent=1)

    @staticmethod
    def from_dict(data: Dict[str, Any], points: PointSet) -> 'GraphInstance':
        if data['n'] != len(points):
            raise InvalidParameterError('points', len(points), f'Graph dump has {data["n"]} vertices.')
        edges = np.asarray(data['edges'], dtype=float).reshape(-1, 3)
        return GraphInstance(points, MetricKind.parse(data['metric']), edges[:, 0].astype(np.int64),
                             edges[:, 1].astype(np.int64), edges[:, 2])

    def __repr__(self) -> str:
        return f'GraphInstance(n={self.n}, m={self.m}, metric={self.metric.label})'


def build_graph(points: PointSet, metric: Union[str, MetricKind]) -> GraphInstance:
    """Builds the intersection graph of ``points`` for ``metric``.

    Raises
    ------
    ValueError
        If ``points`` is empty.
    """
    metric = MetricKind.parse(metric)
    if len(points) < 1:
        raise ValueError('At least one point is required to build a graph.')
    n = len(points)
    iu, iv = np.triu_indices(n, k=1)
    dx = points.coords[iu, 0] - points.coords[iv, 0]
    dy = points.coords[iu, 1] - points.coords[iv, 1]
    keep = metric.adjacent(dx, dy)
    return GraphInstance(points, metric, iu[keep], iv[keep], metric.weight(dx[keep], dy[keep]))


def build_udg(points: PointSet, norm: NormKind = L2) -> GraphInstance:
    """Unit-disk graph: edge iff the l2 distance is at most 2, weighted by the ``norm`` distance."""
    return build_graph(points, MetricKind(Family.UDG, norm))


def build_usg(points: PointSet, norm: NormKind = LINF) -> GraphInstance:
    """Unit-square graph: edge iff the linf distance is at most 2, weighted by the ``norm`` distance."""
    return build_graph(points, MetricKind(Family.USG, norm))


def build_hop_udg(points: PointSet) -> GraphInstance:
    """Unit-disk graph with unit weights. The maximum degree is ``GraphInstance.max_degree``."""
    return build_graph(points, MetricKind(Family.HOP_UDG))


class DistTable:
    """Single-source shortest paths with hop counts and parents.

    Attributes
    ----------
    source : int
        The source vertex.
    dist : numpy.ndarray
        Distances, ``inf`` for unreachable vertices.
    hops : numpy.ndarray
        Edges on the canonical shortest path, ``-1`` for unreachable vertices.
    parent : numpy.ndarray
        Canonical parent, ``-1`` for the source and unreachable vertices.
    """

    __slots__ = ['source', 'dist', 'hops', 'parent']

    def __init__(self, source: int, dist: np.ndarray, hops: np.ndarray, parent: np.ndarray):
        self.source = source
        self.dist = dist
        self.hops = hops
        self.parent = parent

    def path_to(self, v: int) -> List[int]:
        """Returns the canonical path ``source -> v``, empty if ``v`` is unreachable."""
        if not math.isfinite(self.dist[v]):
            return []
        path = [v]
        while path[-1] != self.source:
            path.append(int(self.parent[path[-1]]))
        path.reverse()
        return path


def shortest_paths(g: GraphInstance, source: int) -> DistTable:
    """Dijkstra from ``source`` with canonical tie-breaking.

    Among minimum-weight paths the one with fewest hops wins, then the one whose last hop comes from the smaller parent.

    Raises
    ------
    IndexError
        If ``source`` is not a vertex.
    """
    n = g.n
    if not 0 <= source < n:
        raise IndexError(f'Source {source} is not a vertex of a graph with {n} vertices.')
    dist = np.full(n, math.inf)
    hops = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    settled = np.zeros(n, dtype=bool)
    dist[source], hops[source] = 0.0, 0
    heap = [(0.0, 0, source)]
    adj = g.adjacency
    while heap:
        d, h, u = heapq.heappop(heap)
        if settled[u] or h != hops[u]:
            continue
        settled[u] = True
        for v, w in adj[u]:
            if settled[v]:
                continue
            nd, nh = d + w, h + 1
            old = dist[v]
            tol = TIE_TOL * max(1.0, nd)
            if nd < old - tol:
                dist[v], hops[v], parent[v] = nd, nh, u
                heapq.heappush(heap, (nd, nh, v))
            elif nd <= old + tol and (nh < hops[v] or (nh == hops[v] and u < parent[v])):
                if nh < hops[v]:
                    dist[v], hops[v] = min(old, nd), nh
                    heapq.heappush(heap, (dist[v], nh, v))
                parent[v] = u
    return DistTable(source, dist, hops, parent)


def all_pairs_with_hops(g: GraphInstance) -> Tuple[np.ndarray, np.ndarray]:
    """Returns ``(dist, hops)`` matrices from ``shortest_paths`` on every source."""
    tables = [shortest_paths(g, s) for s in range(g.n)]
    return np.vstack([t.dist for t in tables]), np.vstack([t.hops for t in tables])


class DistanceOracle:
    """Cached shortest-path distances of a ``GraphInstance`` backed by ``scipy.sparse.csgraph.dijkstra``.

    Rows are computed lazily and cached. ``full()`` materialises the whole APSP matrix.
    """

    __slots__ = ['graph', '_rows', '_full']

    def __init__(self, graph: GraphInstance):
        self.graph = graph
        self._rows = {}
        self._full = None

    def full(self) -> np.ndarray:
        if self._full is None:
            self._full = dijkstra(self.graph.csr, directed=False)
        return self._full

    def row(self, source: int) -> np.ndarray:
        if self._full is not None:
            return self._full[source]
        if source not in self._rows:
            self._rows[source] = dijkstra(self.graph.csr, directed=False, indices=int(source))
        return self._rows[source]

    def rows(self, sources: Sequence[int]) -> np.ndarray:
        sources = [int(s) for s in sources]
        if self._full is not None:
            return self._full[sources]
        missing = [s for s in dict.fromkeys(sources) if s not in self._rows]
        if missing:
            block = dijkstra(self.graph.csr, directed=False, indices=missing).reshape(len(missing), -1)
            for s, r in zip(missing, block):
                self._rows[s] = r
        return np.vstack([self._rows[s] for s in sources]) if sources else np.zeros((0, self.graph.n))

    def __call__(self, u: int, v: int) -> float:
        return float(self.row(u)[v])

    def to_set(self, sources: Iterable[int]) -> np.ndarray:
        """Distance from every vertex to the nearest member of ``sources``."""
        sources = sorted({int(s) for s in sources})
        if not sources:
            return np.full(self.graph.n, math.inf)
        return self.rows(sources).min(axis=0)


def nearest_center(g: GraphInstance, clients: Sequence[int], centers: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Returns ``(distance, center)`` for every client. Ties go to the smallest center.

    Raises
    ------
    InvalidParameterError
        If ``centers`` is empty.
    """
    centers = sorted({int(c) for c in centers})
    if not centers:
        raise InvalidParameterError('centers', centers, 'At least one center is required.')
    block = g.oracle.rows(centers)[:, np.asarray(clients, dtype=np.int64)]
    arg = np.argmin(block, axis=0)
    return block[arg, np.arange(block.shape[1])], np.asarray(centers, dtype=np.int64)[arg]


def cost(g: GraphInstance, clients: Sequence[int], centers: Sequence[int], z: int = 1,
         weights: Optional[Sequence[float]] = None) -> float:
    """Returns ``sum_p w(p) * d_G(p, centers)^z``.

    Parameters
    ----------
    g : GraphInstance
        The graph.
    clients : Sequence[int]
        Client vertices, repetitions allowed.
    centers : Sequence[int]
        Center vertices.
    z : int
        The cost exponent. Defaults to ``1``.
    weights : Optional[Sequence[float]]
        Client weights. Defaults to unit weights.

    Raises
    ------
    InvalidParameterError
        If ``centers`` is empty or ``z < 1``.
    """
    if z < 1:
        raise InvalidParameterError('z', z, 'The cost exponent must be at least 1.')
    if len(clients) == 0:
        return 0.0
    d, _ = nearest_center(g, clients, centers)
    w = np.ones(len(d)) if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w * d ** z))


def triangle_power_holds(x: float, y: float, z: int, eps: float) -> bool:
    """Checks ``(x+y)^z <= (1+eps)^(z-1) x^z + ((1+eps)/eps)^(z-1) y^z`` for non-negative ``x, y``."""
    lhs = (x + y) ** z
    rhs = (1 + eps) ** (z - 1) * x ** z + ((1 + eps) / eps) ** (z - 1) * y ** z
    return lhs <= rhs * (1 + 1e-12) + 1e-300


class PropertyReport:
    """Outcome of a property check.

    Attributes
    ----------
    name : str
        The property checked.
    checked : int
        Number of cases examined.
    violations : List[Tuple]
        Offending cases.
    """

    __slots__ = ['name', 'checked', 'violations']

    def __init__(self, name: str):
        self.name = name
        self.checked = 0
        self.violations = []

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def __repr__(self) -> str:
        return f'PropertyReport({self.name}, checked={self.checked}, violations={len(self.violations)})'


def check_locally_euclidean(g: GraphInstance, tol: float = 1e-9) -> PropertyReport:
    """Checks adjacency thresholds ``c1``/``c2``, the edge distortion ``c3``/``c4`` and that every edge is a shortest
    path."""
    report = PropertyReport('locally-euclidean')
    metric = g.metric
    eu = pairwise(g.points.coords, L2)
    adj = g.csr.toarray() > 0
    iu, iv = np.triu_indices(g.n, k=1)
    report.checked = len(iu)
    near = eu[iu, iv] <= metric.c1
    far = eu[iu, iv] > metric.c2
    for a, b in zip(iu[near & ~adj[iu, iv]], iv[near & ~adj[iu, iv]]):
        report.violations.append(('missing-edge', int(a), int(b)))
    for a, b in zip(iu[far & adj[iu, iv]], iv[far & adj[iu, iv]]):
        report.violations.append(('far-edge', int(a), int(b)))
    if metric.weighted:
        u, v, w = g.edges()
        length = eu[u, v]
        bad = (w < metric.c3 * length - tol) | (w > metric.c4 * length + tol)
        for a, b in zip(u[bad], v[bad]):
            report.violations.append(('distortion', int(a), int(b)))
        apsp = g.oracle.full()
        short = apsp[u, v] < w - tol * np.maximum(1.0, w)
        for a, b in zip(u[short], v[short]):
            report.violations.append(('not-shortest', int(a), int(b)))
    return report


def check_bounded_distance(g: GraphInstance, tol: float = 1e-9) -> PropertyReport:
    """Checks every edge weight ``<= c2'`` and ``d_G(u, v) >= c1' * tau`` for pairs whose canonical path has
    ``tau >= 2`` hops."""
    report = PropertyReport('bounded-distance')
    _, _, w = g.edges()
    for i in np.nonzero(w > g.metric.c2p + tol)[0]:
        report.violations.append(('heavy-edge', float(w[i])))
    dist, hops = all_pairs_with_hops(g)
    mask = hops >= 2
    report.checked = int(mask.sum()) + len(w)
    bad = mask & (dist < g.metric.c1p * hops - tol)
    for a, b in zip(*np.nonzero(bad)):
        report.violations.append(('short-path', int(a), int(b), float(dist[a, b]), int(hops[a, b])))
    return report


def ball(g: GraphInstance, v: int, r: float) -> np.ndarray:
    """Vertices at graph distance at most ``r`` from ``v``."""
    return np.nonzero(g.oracle.row(v) <= r)[0]


def graph_mu_net(g: GraphInstance, v: int, r: float, mu: float) -> MuNet:
    """``mu``-net of the ball ``B(v, r)`` of ``g`` using the instance's constants."""
    return mu_net(g.points, ball(g, v, r), mu, g.metric.c1, g.metric.c4, radius=r, spread=g.metric.spread)
