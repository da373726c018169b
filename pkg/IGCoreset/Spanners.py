import math

import networkx as nx
import numpy as np

from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import Delaunay, QhullError
from typing import List, Optional, Sequence, Set, Tuple, Union

from IGCoreset.Core import InvalidParameterError, derive_rng, get_logger
from IGCoreset.Geometry import L2, LINF, SQRT2, PointSet, empty_axis_square
from IGCoreset.Graphs import Family, GraphInstance, MetricKind, PropertyReport

# Declared stretch of the l2 Delaunay graph restricted to unit-disk edges.
UDG_STRETCH = 2.42
# Declared stretch of the linf Delaunay graph restricted to unit-square edges.
USG_STRETCH = 3.0
# Declared stretch of the sqrt(2)-scaled l2 base under lp weights, for p < 2 and p > 2.
LP_LOW_STRETCH = 3.42
LP_HIGH_STRETCH = 4.84

# Sources sampled by verify_stretch beyond the exact threshold are chosen so about this many pairs are compared.
STRETCH_SAMPLE_PAIRS = 10_000


class Triangulation:
    """A planar straight-line triangulation of a ``PointSet``.

    Attributes
    ----------
    points : PointSet
        The points triangulated.
    coords : numpy.ndarray
        The (perturbed) coordinates the triangulation was computed on.
    edges : numpy.ndarray
        ``(m, 2)`` vertex index pairs with ``u < v`` in lexicographic order.
    triangles : numpy.ndarray
        ``(t, 3)`` sorted vertex index triples, one per bounded triangular face.
    """

    __slots__ = ['points', 'coords', 'edges', 'triangles']

    def __init__(self, points: PointSet, coords: np.ndarray, edges: Set[Tuple[int, int]],
                 triangles: Set[Tuple[int, int, int]]):
        self.points = points
        self.coords = coords
        self.edges = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
        self.triangles = np.array(sorted(triangles), dtype=np.int64).reshape(-1, 3)

    def edge_set(self) -> Set[Tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def has_edge(self, u: int, v: int) -> bool:
        a, b = min(u, v), max(u, v)
        idx = np.searchsorted(self.edges[:, 0], a)
        while idx < len(self.edges) and self.edges[idx, 0] == a:
            if self.edges[idx, 1] == b:
                return True
            idx += 1
        return False

    def __len__(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f'Triangulation(n={len(self.points)}, edges={len(self.edges)}, triangles={len(self.triangles)})'


def _complete(n: int) -> Set[Tuple[int, int]]:
    return {(i, j) for i in range(n) for j in range(i + 1, n)}


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Twice the signed area of ``(a, b, c)``, vectorised over the leading axis."""
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _empty_triangles(coords: np.ndarray, edges: Set[Tuple[int, int]]) -> Set[Tuple[int, int, int]]:
    """3-cycles of ``edges`` with no point strictly inside. On a planar straight-line graph these are its triangular
    faces."""
    n = len(coords)
    nbrs = [set() for _ in range(n)]
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    triangles = set()
    for a, b in sorted(edges):
        for c in sorted(nbrs[a] & nbrs[b]):
            if c <= b:
                continue
            pa, pb, pc = coords[a], coords[b], coords[c]
            o = _orient(pa, pb, pc)
            if o == 0:
                continue
            s1 = _orient(pa, pb, coords) * np.sign(o)
            s2 = _orient(pb, pc, coords) * np.sign(o)
            s3 = _orient(pc, pa, coords) * np.sign(o)
            if not np.any((s1 > 0) & (s2 > 0) & (s3 > 0)):
                triangles.add((a, b, c))
    return triangles


def empty_circle_exists(coords: np.ndarray, i: int, j: int) -> bool:
    """Returns ``True`` iff some closed disk has ``coords[i]`` and ``coords[j]`` on its boundary and no other point.

    Disks through both points have their centre on the bisector ``m + t*n``. A point ``r`` off the line ``pq`` rules
    out a half-line of ``t`` bounded by ``T_r``, a point on the line between ``p`` and ``q`` rules out every ``t``. The
    disk exists iff the largest bound from one side is below the smallest bound from the other.
    """
    p, q = coords[i], coords[j]
    m = 0.5 * (p + q)
    d = q - p
    length = math.hypot(d[0], d[1])
    nrm = np.array([-d[1], d[0]]) / length
    mask = np.ones(len(coords), dtype=bool)
    mask[[i, j]] = False
    r = coords[mask]
    if len(r) == 0:
        return True
    rel = r - m
    s = rel @ nrm
    rad2 = 0.25 * length * length
    dist2 = np.einsum('ij,ij->i', rel, rel)
    on_line = np.abs(s) <= 1e-15 * max(1.0, length)
    if np.any(on_line & (dist2 <= rad2)):
        return False
    off = ~on_line
    T = (dist2[off] - rad2) / (2.0 * s[off])
    left, right = T[s[off] < 0], T[s[off] > 0]
    lo = left.max() if len(left) else -math.inf
    hi = right.min() if len(right) else math.inf
    return lo < hi


def l2_delaunay(points: PointSet, method: str = 'scipy') -> Triangulation:
    """Computes the l2 Delaunay triangulation of ``points`` on their perturbed coordinates.

    ``method='scipy'`` uses ``scipy.spatial.Delaunay`` and falls back to the brute-force empty-circle test when Qhull
    rejects the input. ``method='brute'`` always runs the brute-force test, which is the reference predicate::

        tri = l2_delaunay(points)
        assert tri.edge_set() == l2_delaunay(points, method='brute').edge_set()

    Parameters
    ----------
    points : PointSet
        The points.
    method : str
        Either ``'scipy'`` or ``'brute'``. Defaults to ``'scipy'``.

    Returns
    -------
    Triangulation
        The triangulation. With fewer than 3 points it is the complete graph.

    Raises
    ------
    InvalidParameterError
        If ``method`` is unknown.
    """
    if method not in ('scipy', 'brute'):
        raise InvalidParameterError('method', method, 'Expected "scipy" or "brute".')
    n = len(points)
    coords = points.perturbed()
    if n < 3:
        return Triangulation(points, coords, _complete(n), set())
    if method == 'scipy':
        try:
            simplices = Delaunay(coords).simplices
        except QhullError:
            get_logger().debug('Qhull rejected %d points, using the brute-force Delaunay test.', n)
        else:
            edges, triangles = set(), set()
            for simplex in np.sort(simplices, axis=1).tolist():
                a, b, c = simplex
                triangles.add((a, b, c))
                edges.update(((a, b), (a, c), (b, c)))
            return Triangulation(points, coords, edges, triangles)
    edges = {(i, j) for i in range(n) for j in range(i + 1, n) if empty_circle_exists(coords, i, j)}
    return Triangulation(points, coords, edges, _empty_triangles(coords, edges))


def linf_delaunay(points: PointSet, max_dist: Optional[float] = None) -> Triangulation:
    """Computes the linf Delaunay triangulation of ``points`` on their perturbed coordinates.

    ``pq`` is an edge iff some axis-parallel square has ``p`` and ``q`` on its boundary and no other point in it.

    Parameters
    ----------
    points : PointSet
        The points.
    max_dist : Optional[float]
        Only test pairs with linf distance at most ``max_dist``. The result is then the triangulation restricted to
        short edges, which keeps every face whose sides are that short. Defaults to ``None`` (all pairs).

    Returns
    -------
    Triangulation
        The triangulation.
    """
    n = len(points)
    coords = points.perturbed()
    if n < 3:
        return Triangulation(points, coords, _complete(n), set())
    edges = set()
    for i in range(n - 1):
        for j in range(i + 1, n):
            if max_dist is not None and LINF.of(*(coords[i] - coords[j])) > max_dist:
                continue
            mask = np.ones(n, dtype=bool)
            mask[[i, j]] = False
            if empty_axis_square(coords[i], coords[j], coords[mask]) is not None:
                edges.add((i, j))
    return Triangulation(points, coords, edges, _empty_triangles(coords, edges))


class PlanarSpanner:
    """A planar subgraph ``H`` of a host graph ``G`` with ``d_G <= d_H <= alpha * d_G``.

    Attributes
    ----------
    host : GraphInstance
        The host graph ``G``.
    graph : GraphInstance
        The spanner ``H`` over the host's points.
    alpha : float
        The declared stretch.
    construction : str
        Name of the construction, e.g. ``'udel'``, ``'linf-delaunay'`` or ``'udel-l1'``.
    triangulation : Optional[Triangulation]
        The triangulation the edges were taken from, if any.
    """

    __slots__ = ['host', 'graph', 'alpha', 'construction', 'triangulation']

    def __init__(self, host: GraphInstance, graph: GraphInstance, alpha: float, construction: str,
                 triangulation: Optional[Triangulation] = None):
        if alpha < 1:
            raise InvalidParameterError('alpha', alpha, 'Declared stretch must be at least 1.')
        self.host = host
        self.graph = graph
        self.alpha = float(alpha)
        self.construction = construction
        self.triangulation = triangulation

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    def edges(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.graph.edges()

    def to_dict(self) -> dict:
        data = self.graph.to_dict()
        data.update({'alpha': self.alpha, 'construction': self.construction})
        return data

    def dump(self, path: str, **extra):
        """Writes the graph dump format plus ``alpha`` and ``construction``."""
        self.graph.dump(path, alpha=self.alpha, construction=self.construction, **extra)

    def __repr__(self) -> str:
        return f'PlanarSpanner({self.construction}, n={self.n}, m={self.m}, alpha={self.alpha})'


def _with_norm(g: GraphInstance, metric: MetricKind) -> GraphInstance:
    """Same edges as ``g`` with weights recomputed under ``metric``."""
    u, v, _ = g.edges()
    c = g.points.coords
    w = metric.weight(c[u, 0] - c[v, 0], c[u, 1] - c[v, 1])
    return GraphInstance(g.points, metric, u, v, w, origin=g.origin)


def _restrict(g: GraphInstance, edges: Set[Tuple[int, int]]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edges of ``g`` that are also in ``edges``, with ``g``'s weights."""
    u, v, w = g.edges()
    keep = np.array([(a, b) in edges for a, b in zip(u.tolist(), v.tolist())], dtype=bool)
    return u[keep], v[keep], w[keep]


def udg_spanner(g: GraphInstance) -> PlanarSpanner:
    """Returns the l2 Delaunay graph restricted to unit-disk edges, with stretch ``2.42`` under l2 weights.

    If ``g`` is weighted by another norm the spanner is built over the l2-weighted copy of ``g``, which is what
    ``lp_spanner`` expects as its base.

    Raises
    ------
    InvalidParameterError
        If ``g`` is not a unit-disk graph.
    """
    if g.metric.family != Family.UDG:
        raise InvalidParameterError('g', g.metric.label, 'udg_spanner requires a unit-disk graph.')
    host = g if g.metric.norm == L2 else _with_norm(g, MetricKind(Family.UDG, L2))
    tri = l2_delaunay(g.points)
    u, v, w = _restrict(host, tri.edge_set())
    get_logger().debug('UDel spanner keeps %d of %d edges.', len(u), host.m)
    return PlanarSpanner(host, host.with_edges(u, v, w), UDG_STRETCH, 'udel', tri)


def usg_spanner(g: GraphInstance) -> PlanarSpanner:
    """Returns the linf Delaunay graph restricted to unit-square edges, weighted by linf, with stretch ``3``.

    If ``g`` is weighted by another norm the spanner is built over the linf-weighted copy of ``g``.

    Raises
    ------
    InvalidParameterError
        If ``g`` is not a unit-square graph.
    """
    if g.metric.family != Family.USG:
        raise InvalidParameterError('g', g.metric.label, 'usg_spanner requires a unit-square graph.')
    host = g if g.metric.norm == LINF else _with_norm(g, MetricKind(Family.USG, LINF))
    # Perturbation moves points by far less than this slack.
    tri = linf_delaunay(g.points, max_dist=2.0 + 1e-6)
    u, v, w = _restrict(host, tri.edge_set())
    get_logger().debug('linf Delaunay spanner keeps %d of %d edges.', len(u), host.m)
    return PlanarSpanner(host, host.with_edges(u, v, w), USG_STRETCH, 'linf-delaunay', tri)


def hop_spanner(g: GraphInstance) -> PlanarSpanner:
    """Returns the unit-weight l2 Delaunay graph restricted to unit-disk edges of a hop instance.

    The declared stretch is the measured stretch of the hop metric.

    Raises
    ------
    InvalidParameterError
        If ``g`` is not a hop unit-disk graph.
    """
    if g.metric.family != Family.HOP_UDG:
        raise InvalidParameterError('g', g.metric.label, 'hop_spanner requires a hop unit-disk graph.')
    tri = l2_delaunay(g.points)
    u, v, w = _restrict(g, tri.edge_set())
    h = g.with_edges(u, v, w)
    alpha = verify_stretch(g, h) if g.m else 1.0
    return PlanarSpanner(g, h, max(1.0, alpha), 'udel-hop', tri)


def lp_spanner(g: GraphInstance, base: PlanarSpanner) -> PlanarSpanner:
    """Extends an l2 or linf base spanner to the weight norm of ``g``.

    An l2 base is scaled by ``sqrt(2)``, which dominates every lp/l2 ratio, and gets stretch ``3.42`` for ``p < 2``
    and ``4.84`` for ``p > 2``. A linf base is scaled by ``2^(1/p)`` and gets stretch ``3 * 2^(1/p)``. When ``g`` is
    already weighted like the base, the base is returned unchanged.

    Parameters
    ----------
    g : GraphInstance
        The host graph weighted by its own norm.
    base : PlanarSpanner
        Output of ``udg_spanner`` or ``usg_spanner`` over the same points.

    Returns
    -------
    PlanarSpanner
        A spanner of ``g``.

    Raises
    ------
    InvalidParameterError
        If the point sets differ, the families differ or the base is neither l2 nor linf weighted.
    """
    if not g.points.same_points(base.host.points):
        raise InvalidParameterError('base', base, 'The base spanner is over a different point set.')
    if g.metric.family != base.host.metric.family:
        raise InvalidParameterError('base', base, f'Base family {base.host.metric.label} does not match '
                                                  f'{g.metric.label}.')
    base_norm, p = base.host.metric.norm, g.metric.norm.p
    if g.metric.norm == base_norm:
        return base
    if base_norm == L2:
        scale, alpha = SQRT2, (LP_LOW_STRETCH if p < 2 else LP_HIGH_STRETCH)
    elif base_norm == LINF:
        scale = 2.0 ** (1.0 / p)
        alpha = USG_STRETCH * scale
    else:
        raise InvalidParameterError('base', base_norm.label, 'The base spanner must be l2 or linf weighted.')
    u, v, w = base.edges()
    return PlanarSpanner(g, g.with_edges(u, v, w * scale), alpha, f'{base.construction}-{g.metric.norm.label}',
                         base.triangulation)


def declared_stretch(metric: MetricKind) -> Optional[float]:
    """Stretch declared by ``family_spanner`` for ``metric``, or ``None`` for hop metrics whose stretch is measured."""
    if metric.family == Family.HOP_UDG:
        return None
    if metric.family == Family.UDG:
        if metric.norm == L2:
            return UDG_STRETCH
        return LP_LOW_STRETCH if metric.norm.p < 2 else LP_HIGH_STRETCH
    return USG_STRETCH * 2.0 ** (1.0 / metric.norm.p)


def family_spanner(g: GraphInstance) -> PlanarSpanner:
    """Builds the planar spanner appropriate for the family and norm of ``g``."""
    if g.metric.family == Family.HOP_UDG:
        return hop_spanner(g)
    if g.metric.family == Family.UDG:
        return lp_spanner(g, udg_spanner(g))
    return lp_spanner(g, usg_spanner(g))


def induced_spanner(g: GraphInstance, subset: Sequence[int]) -> PlanarSpanner:
    """Builds the family spanner of ``G[subset]`` from scratch on the subset's points.

    Raises
    ------
    InvalidParameterError
        If ``subset`` is empty.
    """
    if len(subset) == 0:
        raise InvalidParameterError('subset', subset, 'The vertex subset must be non-empty.')
    return family_spanner(g.induced(subset))


def verify_stretch(g: GraphInstance, h: Union[PlanarSpanner, GraphInstance], max_exact: int = 500,
                   seed: int = 0) -> float:
    """Returns ``max d_H / d_G`` over connected pairs of distinct vertices.

    Up to ``max_exact`` vertices the comparison uses full APSP. Beyond that, sources are sampled so about 10^4 pairs
    are compared. Returns ``inf`` if ``H`` disconnects two vertices connected in ``G`` and ``1.0`` when there are no
    pairs.

    Raises
    ------
    InvalidParameterError
        If ``g`` and ``h`` have different vertex counts.
    """
    hg = h.graph if isinstance(h, PlanarSpanner) else h
    if hg.n != g.n:
        raise InvalidParameterError('h', hg.n, f'Spanner has a different vertex count than the host ({g.n}).')
    if g.n <= max_exact:
        sources = np.arange(g.n)
    else:
        count = max(1, math.ceil(STRETCH_SAMPLE_PAIRS / g.n))
        sources = np.sort(derive_rng(seed, 'stretch').choice(g.n, size=min(count, g.n), replace=False))
    dg = g.oracle.rows(sources)
    dh = dijkstra(hg.csr, directed=False, indices=sources).reshape(len(sources), -1)
    mask = np.isfinite(dg) & (dg > 0)
    if not np.any(mask):
        return 1.0
    if np.any(~np.isfinite(dh[mask])):
        return math.inf
    return float(np.max(dh[mask] / dg[mask]))


def _segments(g: GraphInstance, coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    u, v, _ = g.edges()
    return u, v, coords[u], coords[v]


def count_crossings(h: Union[PlanarSpanner, GraphInstance], coords: Optional[np.ndarray] = None) -> int:
    """Counts pairs of edges whose segments cross properly. Edges sharing an endpoint never count.

    ``coords`` defaults to the perturbed coordinates, the embedding every triangulation is computed on.
    """
    hg = h.graph if isinstance(h, PlanarSpanner) else h
    coords = hg.points.perturbed() if coords is None else coords
    u, v, a, b = _segments(hg, coords)
    total = 0
    for i in range(len(u) - 1):
        c, d = a[i + 1:], b[i + 1:]
        shared = (u[i + 1:] == u[i]) | (u[i + 1:] == v[i]) | (v[i + 1:] == u[i]) | (v[i + 1:] == v[i])
        o1 = _orient(a[i], b[i], c)
        o2 = _orient(a[i], b[i], d)
        o3 = _orient(c, d, np.broadcast_to(a[i], c.shape))
        o4 = _orient(c, d, np.broadcast_to(b[i], c.shape))
        total += int(np.sum(~shared & (o1 * o2 < 0) & (o3 * o4 < 0)))
    return total


def is_planar(h: Union[PlanarSpanner, GraphInstance]) -> bool:
    """Geometric planarity: no proper crossings and ``|E| <= 3|V| - 6``, cross-checked with
    ``networkx.check_planarity``."""
    hg = h.graph if isinstance(h, PlanarSpanner) else h
    if hg.n < 3:
        return True
    if hg.m > 3 * hg.n - 6:
        return False
    if count_crossings(hg) > 0:
        return False
    planar, _ = nx.check_planarity(hg.to_networkx())
    return planar


def usg_edge_bounds(spanner: PlanarSpanner, tol: float = 1e-9) -> Tuple[PropertyReport, float]:
    """Checks, for every edge ``ab`` of a linf unit-square host, that ``H`` holds an ``a-b`` path of length at most
    ``2 D(a, b) + delta(a, b)`` whose edges all have linf length at most ``D(a, b)``.

    Returns
    -------
    Tuple[PropertyReport, float]
        The report and the largest ratio ``path / (2D + delta)`` seen.
    """
    report = PropertyReport('usg-edge-bound')
    host, hg = spanner.host, spanner.graph
    coords = host.points.coords
    hu, hv, _ = hg.edges()
    hlen = LINF.of(coords[hu, 0] - coords[hv, 0], coords[hu, 1] - coords[hv, 1])
    gu, gv, _ = host.edges()
    worst = 0.0
    for a, b in zip(gu.tolist(), gv.tolist()):
        dx, dy = abs(coords[a, 0] - coords[b, 0]), abs(coords[a, 1] - coords[b, 1])
        D, delta = max(dx, dy), min(dx, dy)
        keep = hlen <= D * (1 + tol) + tol
        sub = csr_matrix((np.concatenate([hlen[keep], hlen[keep]]),
                          (np.concatenate([hu[keep], hv[keep]]), np.concatenate([hv[keep], hu[keep]]))),
                         shape=(host.n, host.n))
        bound = 2 * D + delta
        length = float(dijkstra(sub, directed=False, indices=a, limit=bound * (1 + tol) + tol)[b])
        report.checked += 1
        worst = max(worst, length / bound)
        if length > bound * (1 + tol) + tol:
            report.violations.append(('edge-bound', a, b, length, bound))
    return report, worst


class CrossedTriangle:
    """A triangle whose interior meets segment ``ab``, with the side through which the segment leaves it.

    Attributes
    ----------
    triangle : Tuple[int, int, int]
        Vertex indices.
    t_in, t_out : float
        Segment parameters where ``ab`` enters and leaves the triangle.
    high, low : int
        Endpoints of the exit side left and right of ``a -> b``. Both are ``b`` for the last triangle.
    """

    __slots__ = ['triangle', 't_in', 't_out', 'high', 'low']

    def __init__(self, triangle: Tuple[int, int, int], t_in: float, t_out: float, high: int, low: int):
        self.triangle = triangle
        self.t_in = t_in
        self.t_out = t_out
        self.high = high
        self.low = low

    def __repr__(self) -> str:
        return f'CrossedTriangle({self.triangle}, exit=({self.high}, {self.low}))'


def crossing_sequence(tri: Triangulation, a: int, b: int, tol: float = 1e-9) -> Optional[List[CrossedTriangle]]:
    """Returns the triangles of ``tri`` crossed by segment ``ab`` in order from ``a`` to ``b``.

    Returns ``None`` when the crossed triangles do not chain from ``a`` to ``b``, which happens when ``ab`` runs
    through a vertex or leaves the restricted triangulation.
    """
    coords = tri.coords
    A, B = coords[a], coords[b]
    seg = B - A
    crossed = []
    for triangle in tri.triangles.tolist():
        verts = triangle if _orient(*coords[triangle]) > 0 else triangle[::-1]
        t_lo, t_hi, exit_edge = 0.0, 1.0, None
        empty = False
        for k in range(3):
            vi, vj = verts[k], verts[(k + 1) % 3]
            e = coords[vj] - coords[vi]
            num = e[0] * (A[1] - coords[vi][1]) - e[1] * (A[0] - coords[vi][0])
            den = e[0] * seg[1] - e[1] * seg[0]
            if den == 0:
                if num < 0:
                    empty = True
                    break
                continue
            t = -num / den
            if den > 0:
                t_lo = max(t_lo, t)
            elif t < t_hi:
                t_hi, exit_edge = t, (vi, vj)
        if empty or t_hi - t_lo <= tol:
            continue
        if t_hi >= 1 - tol and b in triangle:
            high = low = b
        elif exit_edge is None:
            return None
        else:
            vi, vj = exit_edge
            left = _orient(A, B, coords[vi]) > 0
            high, low = (vi, vj) if left else (vj, vi)
        crossed.append(CrossedTriangle(tuple(triangle), t_lo, t_hi, high, low))
    if not crossed:
        return None
    crossed.sort(key=lambda c: c.t_in)
    if crossed[0].t_in > tol or crossed[-1].t_out < 1 - tol:
        return None
    for prev, nxt in zip(crossed, crossed[1:]):
        if abs(prev.t_out - nxt.t_in) > tol:
            return None
    return crossed


def _rectangle_empty(coords: np.ndarray, a: int, b: int) -> bool:
    lo, hi = np.minimum(coords[a], coords[b]), np.maximum(coords[a], coords[b])
    inside = np.all((coords >= lo) & (coords <= hi), axis=1)
    inside[[a, b]] = False
    return not np.any(inside)


def check_crossing_claims(spanner: PlanarSpanner, tol: float = 1e-9) -> Tuple[PropertyReport, int]:
    """Checks the crossed-triangle claims behind the unit-square spanner bound.

    For every host edge ``ab`` that is not a triangulation edge and whose closed rectangle ``R(a, b)`` holds no other
    point, with ``w = D(a, b)``:

    * every side of every crossed triangle has linf length below ``w``,
    * every exit point other than ``b`` is within linf distance ``w`` of ``a``,
    * if no exit side before the last is gentle (slope at most 1 in the frame where ``ab`` runs along x), then
      ``d_H(a, b) <= 2w``.

    Returns
    -------
    Tuple[PropertyReport, int]
        The report and the number of pairs skipped because the crossed triangles did not chain.

    Raises
    ------
    InvalidParameterError
        If ``spanner`` carries no triangulation.
    """
    tri = spanner.triangulation
    if tri is None:
        raise InvalidParameterError('spanner', spanner, 'The spanner carries no triangulation.')
    report = PropertyReport('crossing-claims')
    coords = tri.coords
    dtri = tri.edge_set()
    gu, gv, _ = spanner.host.edges()
    skipped = 0
    oracle = spanner.graph.oracle
    for a, b in zip(gu.tolist(), gv.tolist()):
        if (a, b) in dtri or not _rectangle_empty(coords, a, b):
            continue
        seq = crossing_sequence(tri, a, b)
        if seq is None:
            skipped += 1
            continue
        report.checked += 1
        w = LINF.of(*(coords[a] - coords[b]))
        bound = w + tol
        for c in seq:
            x, y, z = c.triangle
            sides = [LINF.of(*(coords[p] - coords[q])) for p, q in ((x, y), (y, z), (x, z))]
            if max(sides) >= bound:
                report.violations.append(('side-length', a, b, c.triangle, max(sides), w))
        for c in seq[:-1]:
            far = max(LINF.of(*(coords[a] - coords[c.high])), LINF.of(*(coords[a] - coords[c.low])))
            if far >= bound:
                report.violations.append(('exit-distance', a, b, c.triangle, far, w))
        x_major = abs(coords[b, 0] - coords[a, 0]) >= abs(coords[b, 1] - coords[a, 1])
        gentle = False
        for c in seq[:-1]:
            dx, dy = np.abs(coords[c.high] - coords[c.low])
            gentle |= bool(dy <= dx) if x_major else bool(dx <= dy)
        if not gentle:
            d = oracle(a, b)
            if d > 2 * w * (1 + tol) + tol:
                report.violations.append(('potential-path', a, b, d, 2 * w))
    return report, skipped
