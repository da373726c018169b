import logging
import math

import numpy as np
import pandas as pd

from enum import IntEnum
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from IGCoreset.Core import (ConstantsPreset, InvalidParameterError, InvariantViolationError, PreconditionError,
                            get_logger, get_preset)
from IGCoreset.Decomposition import DecompTree, build_tree, root_leaf_path
from IGCoreset.Geometry import SQRT2, MuNet, grid_cells, mu_net
from IGCoreset.Graphs import Family, GraphInstance, PropertyReport, nearest_center, shortest_paths
from IGCoreset.Spanners import declared_stretch, family_spanner

# The O-constant recorded for the additive error of the net-sub, support and backward bounds.
CLAIM_CONSTANT = 8.0


class SupportGraph:
    """Bounded degree support graph.

    Every occupied grid cell of side ``mu`` contributes its smallest vertex as a special point. ``f`` maps every vertex
    to the special point of its cell, and two special points are adjacent iff some edge of ``G`` joins their cells, so
    every path of ``G`` maps to a walk. For hop metrics the support graph is ``G`` itself with ``f`` the identity.

    Attributes
    ----------
    graph : GraphInstance
        The host graph.
    mu : float
        Grid side, ``0`` for the identity support graph.
    special : numpy.ndarray
        Sorted special points.
    f : numpy.ndarray
        ``f[v]`` is the special point of ``v``.
    csr : scipy.sparse.csr_matrix
        Unit-weight adjacency over all host vertices. Only special points have edges.
    K : float
        Constant of the degree bound ``K / mu^2``.
    """

    __slots__ = ['graph', 'mu', 'special', 'f', 'csr', 'K']

    def __init__(self, graph: GraphInstance, mu: float, f: np.ndarray, u: np.ndarray, v: np.ndarray, K: float):
        self.graph = graph
        self.mu = mu
        self.f = np.asarray(f, dtype=np.int64)
        self.special = np.unique(self.f)
        n = graph.n
        data = np.ones(2 * len(u))
        self.csr = csr_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
        self.csr.data[:] = 1.0
        self.K = K

    @staticmethod
    def build(g: GraphInstance, mu: float) -> 'SupportGraph':
        """Builds the grid support graph of ``g`` with precision ``mu``.

        Raises
        ------
        InvalidParameterError
            If ``mu`` is not in ``(0, c1/sqrt(2))``.
        """
        if not (0.0 < mu < g.metric.c1 / SQRT2):
            raise InvalidParameterError('mu', mu, f'Expected 0 < mu < c1/sqrt(2) = {g.metric.c1 / SQRT2:.6g}.')
        cells = grid_cells(g.points.coords, mu)
        _, inverse = np.unique(cells, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        rep = np.full(inverse.max() + 1, g.n, dtype=np.int64)
        np.minimum.at(rep, inverse, np.arange(g.n))
        f = rep[inverse]
        gu, gv, _ = g.edges()
        a, b = f[gu], f[gv]
        keep = a != b
        pairs = np.unique(np.stack([np.minimum(a[keep], b[keep]), np.maximum(a[keep], b[keep])], axis=1), axis=0)
        pairs = pairs.reshape(-1, 2)
        K = (2.0 * g.metric.c2 + 3.0) ** 2
        return SupportGraph(g, mu, f, pairs[:, 0], pairs[:, 1], K)

    @staticmethod
    def identity(g: GraphInstance) -> 'SupportGraph':
        """``G`` itself with ``f`` the identity."""
        u, v, _ = g.edges()
        return SupportGraph(g, 0.0, np.arange(g.n), u, v, math.inf)

    @property
    def degree_bound(self) -> float:
        if self.mu <= 0:
            return float(self.graph.max_degree)
        return self.K / self.mu ** 2

    @property
    def max_degree(self) -> int:
        return int(np.diff(self.csr.indptr).max()) if self.graph.n else 0

    def hops_from(self, sources: Sequence[int]) -> np.ndarray:
        """Hop distance in the support graph from the nearest of ``sources``, ``inf`` where unreachable."""
        sources = np.unique(np.asarray(sources, dtype=np.int64))
        if len(sources) == 0:
            return np.full(self.graph.n, math.inf)
        return dijkstra(self.csr, directed=False, indices=sources, unweighted=True, min_only=True)

    def walk_image(self, path: Sequence[int]) -> List[int]:
        """Maps a path of ``G`` to its support walk, merging consecutive repeats."""
        walk = []
        for x in path:
            y = int(self.f[x])
            if not walk or walk[-1] != y:
                walk.append(y)
        return walk

    def check(self, tol: float = 1e-9) -> PropertyReport:
        """Checks ``d_G(v, f(v)) <= c4*sqrt(2)*mu``, the degree bound and that every edge of ``G`` maps to a vertex or
        an edge of the support graph."""
        report = PropertyReport('support-graph')
        g = self.graph
        report.checked = g.n + g.m
        bound = g.metric.c4 * SQRT2 * self.mu
        for v in range(g.n):
            fv = int(self.f[v])
            if fv != v and g.oracle(v, fv) > bound + tol:
                report.violations.append(('far-special', v, fv))
        if self.max_degree > self.degree_bound:
            report.violations.append(('degree', self.max_degree, self.degree_bound))
        u, v, _ = g.edges()
        for a, b in zip(self.f[u].tolist(), self.f[v].tolist()):
            if a != b and self.csr[a, b] <= 0:
                report.violations.append(('broken-walk', a, b))
        return report

    def __repr__(self) -> str:
        return f'SupportGraph(special={len(self.special)}, mu={self.mu}, max_degree={self.max_degree})'


def build_c_net(g: GraphInstance, X: Sequence[int], A: Sequence[int], eps: float, z: int
                ) -> Tuple[np.ndarray, Dict[int, MuNet]]:
    """Builds ``C_net``.

    For every ``p in X`` with ``d(p, A) < 1`` the ball ``B(p, (10z/eps) d(p, A))`` gets an
    ``(eps^3/z^3) d(p, A)``-net. Hop metrics have no net centers.

    Returns
    -------
    Tuple[numpy.ndarray, Dict[int, MuNet]]
        The sorted net members and the net built for every cheap client.

    Raises
    ------
    InvalidParameterError
        If ``A`` is empty.
    """
    if len(A) == 0:
        raise InvalidParameterError('A', A, 'The reference solution must be non-empty.')
    nets = {}
    if g.metric.family == Family.HOP_UDG:
        return np.zeros(0, dtype=np.int64), nets
    dA = g.oracle.to_set(A)
    for p in np.unique(np.asarray(X, dtype=np.int64)).tolist():
        if dA[p] >= 1:
            continue
        if dA[p] == 0:
            nets[p] = MuNet([p], {p: p}, 0.0, 0.0, 1.0, 1.0)
            continue
        radius = (10.0 * z / eps) * dA[p]
        ball = np.nonzero(g.oracle.row(p) <= radius)[0]
        nets[p] = mu_net(g.points, ball, (eps / z) ** 3 * dA[p], g.metric.c1, g.metric.c4, radius=radius,
                         spread=g.metric.spread)
    members = sorted({m for net in nets.values() for m in net.members})
    return np.asarray(members, dtype=np.int64), nets


def build_c_support(g: GraphInstance, X: Sequence[int], eps: float, z: int, ell: int,
                    support: Optional[SupportGraph] = None) -> Tuple[np.ndarray, SupportGraph]:
    """Builds ``C_support``: every support vertex within ``ell`` hops of ``f(p)`` for some ``p in X``.

    Parameters
    ----------
    g : GraphInstance
        The host graph.
    X : Sequence[int]
        Clients.
    eps : float
        Precision.
    z : int
        Cost exponent.
    ell : int
        Hop radius.
    support : Optional[SupportGraph]
        A prebuilt support graph. Defaults to the identity for hop metrics and the ``(eps/z)^2`` grid otherwise.

    Returns
    -------
    Tuple[numpy.ndarray, SupportGraph]
        The sorted members and the support graph.
    """
    if support is None:
        support = SupportGraph.identity(g) if g.metric.family == Family.HOP_UDG else \
            SupportGraph.build(g, (eps / z) ** 2)
    X = np.asarray(X, dtype=np.int64)
    hops = support.hops_from(support.f[X]) if len(X) else np.full(g.n, math.inf)
    members = np.nonzero(hops <= ell)[0]
    return members, support


def round_clamped(value: float, unit: float, cap: float) -> int:
    """Rounds ``value`` to the nearest multiple of ``unit``, ties toward minus infinity, and clamps it at ``cap``.

    Returns the multiple's index. A zero ``unit`` yields ``0`` for a zero value and ``-1`` otherwise.
    """
    if unit <= 0:
        return 0 if value == 0 else -1
    if math.isinf(unit):
        return 0 if math.isfinite(value) else -1
    top = math.ceil(cap / unit) if math.isfinite(cap) else None
    if not math.isfinite(value):
        return top if top is not None else -1
    m = math.ceil(value / unit - 0.5)
    return m if top is None else min(m, top)


class TupleKind(IntEnum):
    """Kinds of rounded distance tuples.

    Values are::

        TUPLE1 = 0  # Rounded distances to landmarks, q1 and the leaf's clients.
        TUPLE2 = 1  # Whether d(q1, s) lies strictly between the q4 and q3 thresholds.
        LEAF = 2    # Rounded distances to the leaf's clients.
    """
    TUPLE1 = 0
    TUPLE2 = 1
    LEAF = 2


class RoundedTuple(NamedTuple):
    """One block of the canonical tuple of a vertex. Blocks compare field by field."""
    kind: TupleKind
    region: int
    path: int
    anchors: Tuple[Optional[int], ...]
    entries: Tuple[Tuple[str, int, Union[int, bool]], ...]


class LandmarkSet:
    """Landmarks on separator path ``P_ij`` for the anchors ``(q1, q2)``.

    The stretch of the path inside ``Q_ij`` is cut every ``mu^2 D`` units. A cut on a vertex contributes that vertex,
    a cut inside an edge contributes both endpoints.

    Attributes
    ----------
    region, path_index : int
        ``i`` and ``j``.
    q1, q2 : int
        The anchors.
    D : float
        ``d_i(q1, q2) + d(q2, A)``.
    mu : float
        Landmark resolution.
    Q : List[int]
        Path vertices with ``d_i(q1, x) <= D / mu^2``.
    landmarks : List[int]
        The landmarks in path order.
    positions : Dict[int, float]
        Position of every path vertex along the path, measured with ``H_i`` weights.
    """

    __slots__ = ['region', 'path_index', 'q1', 'q2', 'D', 'mu', 'Q', 'landmarks', 'positions']

    def __init__(self, region: int, path_index: int, q1: int, q2: int, D: float, mu: float, Q: List[int],
                 landmarks: List[int], positions: Dict[int, float]):
        self.region = region
        self.path_index = path_index
        self.q1 = q1
        self.q2 = q2
        self.D = D
        self.mu = mu
        self.Q = Q
        self.landmarks = landmarks
        self.positions = positions

    def size_bound(self, alpha: float) -> float:
        """``2 * (2 alpha / mu^4 + 1)``: two landmarks per cut over a stretch of at most ``2 alpha D / mu^2``."""
        return 2.0 * (2.0 * alpha / self.mu ** 4 + 1.0)

    def __len__(self) -> int:
        return len(self.landmarks)


def build_landmarks(tree: DecompTree, rid: int, j: int, q1: int, q2: int, D: float, mu: float) -> LandmarkSet:
    """Builds the landmark set of separator path ``j`` of region ``rid`` for anchors ``q1, q2``."""
    region = tree[rid]
    path = region.separator.paths[j]
    gi = tree.region_graph(rid)
    hi = region.spanner.graph
    local = [region.local(x) for x in path]
    row_q1 = gi.oracle.row(region.local(q1))
    cum = np.zeros(len(path))
    for k in range(1, len(path)):
        cum[k] = cum[k - 1] + hi.edge_weight(local[k - 1], local[k])
    positions = dict(zip(path, cum.tolist()))
    in_q = row_q1[local] <= D / mu ** 2
    Q = [x for x, keep in zip(path, in_q) if keep]
    if not Q:
        return LandmarkSet(rid, j, q1, q2, D, mu, Q, [], positions)
    first, last = int(np.argmax(in_q)), len(path) - 1 - int(np.argmax(in_q[::-1]))
    step = mu ** 2 * D
    if step <= 0 or first == last:
        return LandmarkSet(rid, j, q1, q2, D, mu, Q, [path[first]], positions)
    beta = cum[last] - cum[first]
    marks = cum[first] + step * np.arange(int(math.floor(beta / step + 1e-12)) + 1)
    chosen = []
    for mark in marks:
        k = min(int(np.searchsorted(cum, mark)), last)
        if abs(cum[k] - mark) <= 1e-12 * max(1.0, mark):
            chosen.append(k)
        else:
            chosen.extend((max(k - 1, first), k))
    landmarks = [path[k] for k in sorted(set(chosen))]
    return LandmarkSet(rid, j, q1, q2, D, mu, Q, landmarks, positions)


class CentroidSet:
    """The centroid set ``C = C_net | C_support | C_landmark`` with everything needed to replace a solution.

    Attributes
    ----------
    graph : GraphInstance
        The host graph.
    X, A : numpy.ndarray
        Sorted clients and reference centers.
    eps : float
        Precision.
    z : int
        Cost exponent.
    preset : ConstantsPreset
        The constants in use.
    alpha : float
        Spanner stretch used for the hop radius.
    ell : int
        Support hop radius.
    dA : numpy.ndarray
        ``d(v, A)`` for every vertex.
    net : numpy.ndarray
        ``C_net``.
    nets : Dict[int, MuNet]
        The net of every cheap client.
    support : numpy.ndarray
        ``C_support``.
    support_graph : SupportGraph
        The support graph.
    landmark : numpy.ndarray
        ``C_landmark``.
    groups : Dict[Tuple[int, tuple], int]
        Maps ``(leaf, canonical tuple)`` to its representative.
    tree : DecompTree
        The decomposition over ``X``.
    landmark_mu : float
        Resolution of the rounded tuples.
    r_prime : numpy.ndarray
        Mask of vertices whose canonical path from every client has more than ``ell`` hops.
    """

    __slots__ = ['graph', 'X', 'A', 'eps', 'z', 'preset', 'alpha', 'ell', 'dA', 'net', 'nets', 'support',
                 'support_graph', 'landmark', 'groups', 'tree', 'landmark_mu', 'r_prime', '_landmarks']

    def __init__(self, graph: GraphInstance, X: np.ndarray, A: np.ndarray, eps: float, z: int,
                 preset: ConstantsPreset, alpha: float, ell: int):
        self.graph = graph
        self.X = X
        self.A = A
        self.eps = eps
        self.z = z
        self.preset = preset
        self.alpha = alpha
        self.ell = ell
        self.dA = graph.oracle.to_set(A)
        self.net = np.zeros(0, dtype=np.int64)
        self.nets = {}
        self.support = np.zeros(0, dtype=np.int64)
        self.support_graph = None
        self.landmark = np.zeros(0, dtype=np.int64)
        self.groups = {}
        self.tree = None
        self.landmark_mu = preset.landmark_mu(eps, z)
        self.r_prime = np.zeros(graph.n, dtype=bool)
        self._landmarks = {}

    @property
    def members(self) -> np.ndarray:
        return np.unique(np.concatenate([self.net, self.support, self.landmark]))

    def __len__(self) -> int:
        return len(self.members)

    def landmarks(self, rid: int, j: int, q1: int, q2: int, D: float) -> LandmarkSet:
        key = (rid, j, q1, q2)
        if key not in self._landmarks:
            self._landmarks[key] = build_landmarks(self.tree, rid, j, q1, q2, D, self.landmark_mu)
        return self._landmarks[key]

    def landmark_sets(self) -> List[LandmarkSet]:
        return [self._landmarks[k] for k in sorted(self._landmarks)]

    def sizes(self) -> Dict[str, Any]:
        """Set sizes plus the logarithm of the worst-case size shape, for monitoring."""
        nx_ = max(len(self.X), 2)
        ratio = self.z / self.eps
        shape = math.log(nx_) ** 2 + self.z ** 16 * self.eps ** -8 * math.log(ratio) ** 8 * math.log(nx_)
        return {
            'net': len(self.net),
            'support': len(self.support),
            'landmark': len(self.landmark),
            'total': len(self),
            'ell': self.ell,
            'r_prime': int(self.r_prime.sum()),
            'log_size_shape': shape,
        }

    def __repr__(self) -> str:
        return f'CentroidSet(net={len(self.net)}, support={len(self.support)}, landmark={len(self.landmark)})'


def long_path_mask(g: GraphInstance, X: Sequence[int], ell: int) -> np.ndarray:
    """Vertices ``s`` with ``|pi_G(x, s)| > ell`` for every client ``x``. Unreachable clients count as far."""
    nearest = np.full(g.n, np.iinfo(np.int64).max, dtype=np.int64)
    for x in np.unique(np.asarray(X, dtype=np.int64)).tolist():
        hops = shortest_paths(g, x).hops
        reach = hops >= 0
        nearest[reach] = np.minimum(nearest[reach], hops[reach])
    return nearest > ell


def canonical_tuple(s: int, cs: CentroidSet) -> Tuple[RoundedTuple, ...]:
    """Computes the canonical rounded tuple ``D(s)`` of a long-path vertex.

    For every separated region on the root-leaf path of ``s``, ``q1`` is the client of the region closest to ``s``.
    If some client ``q2`` satisfies ``mu d_i(q1, s) <= d_i(q1, q2) + d(q2, A) <= d_i(q1, s) / mu`` every separator
    path gets a ``TUPLE1`` block, otherwise a ``TUPLE2`` block over the extremal anchors ``q3`` and ``q4``. The
    ``LEAF`` block comes last. Ties go to the smallest vertex id.

    Raises
    ------
    PreconditionError
        If ``s`` is within ``ell`` hops of a client.
    """
    if not cs.r_prime[s]:
        raise PreconditionError('canonical_tuple', f'vertex {s} is within {cs.ell} hops of a client.')
    tree, mu, dA = cs.tree, cs.landmark_mu, cs.dA
    chain = root_leaf_path(tree, s)
    leaf = chain[-1]
    leaf_x = cs.X[np.isin(cs.X, leaf.vertices)]
    blocks = []
    for region in chain[:-1]:
        if region.separator is None:
            continue
        xs = cs.X[np.isin(cs.X, region.vertices)]
        if len(xs) == 0:
            continue
        gi = tree.region_graph(region.id)
        row_s = gi.oracle.row(region.local(s))
        lx = np.searchsorted(region.vertices, xs)
        k1 = int(np.argmin(row_s[lx]))
        q1 = int(xs[k1])
        d1 = float(row_s[lx[k1]])
        Dq = gi.oracle.row(lx[k1])[lx] + dA[xs]
        eligible = (mu * d1 <= Dq) & (Dq <= d1 / mu)
        if np.any(eligible):
            k2 = int(np.argmax(eligible))
            q2, D = int(xs[k2]), float(Dq[k2])
            x_entries = tuple(('x', int(x), round_clamped(float(row_s[region.local(x)]), mu * dA[x], dA[x] / mu))
                              for x in leaf_x)
            q1_entry = ('q1', q1, round_clamped(d1, mu * D, 3 * D / mu))
            for j in range(len(region.separator.paths)):
                lms = cs.landmarks(region.id, j, q1, q2, D)
                entries = tuple(('l', l, round_clamped(float(row_s[region.local(l)]), mu ** 2 * D, 3 * D / mu ** 2))
                                for l in lms.landmarks)
                blocks.append(RoundedTuple(TupleKind.TUPLE1, region.id, j, (q1, q2),
                                           entries + (q1_entry,) + x_entries))
        else:
            above = Dq > d1 / mu
            below = Dq < mu * d1
            q3 = int(xs[np.argmin(np.where(above, Dq, np.inf))]) if np.any(above) else None
            q4 = int(xs[np.argmax(np.where(below, Dq, -np.inf))]) if np.any(below) else None
            flag = True
            if q4 is not None:
                flag &= bool(Dq[xs == q4][0] / mu < d1)
            if q3 is not None:
                flag &= bool(d1 < mu * Dq[xs == q3][0])
            for j in range(len(region.separator.paths)):
                blocks.append(RoundedTuple(TupleKind.TUPLE2, region.id, j, (q1, q3, q4), (('flag', q1, flag),)))
    row_g = cs.graph.oracle.row(s)
    leaf_entries = tuple(('x', int(x), round_clamped(float(row_g[x]), mu * dA[x], dA[x] / mu)) for x in leaf_x)
    blocks.append(RoundedTuple(TupleKind.LEAF, leaf.id, -1, (), leaf_entries))
    return tuple(blocks)


def build_c_landmark(cs: CentroidSet, logger: Optional[logging.Logger] = None) -> np.ndarray:
    """Groups every long-path vertex by ``(leaf, canonical tuple)`` and keeps the smallest vertex of each group."""
    logger = get_logger(logger)
    groups = {}
    for s in np.nonzero(cs.r_prime)[0].tolist():
        leaf = root_leaf_path(cs.tree, s)[-1].id
        groups.setdefault((leaf, canonical_tuple(s, cs)), s)
    cs.groups = groups
    cs.landmark = np.asarray(sorted(set(groups.values())), dtype=np.int64)
    logger.debug('%d long-path vertices fall into %d tuple groups.', int(cs.r_prime.sum()), len(groups))
    return cs.landmark


def build_centroid_set(g: GraphInstance, X: Sequence[int], A: Sequence[int], eps: float, z: int = 1,
                       preset: Union[str, ConstantsPreset] = 'desk', ell: Optional[int] = None,
                       tree: Optional[DecompTree] = None, logger: Optional[logging.Logger] = None) -> CentroidSet:
    """Builds the centroid set of ``X`` against the reference solution ``A``::

        cs = build_centroid_set(g, X, A, eps=0.5, z=1)
        replacement = replace_solution(S, cs)

    Parameters
    ----------
    g : GraphInstance
        The host graph.
    X : Sequence[int]
        Clients.
    A : Sequence[int]
        Reference centers.
    eps : float
        Precision in ``(0, 1)``.
    z : int
        Cost exponent. Defaults to ``1``.
    preset : Union[str, ConstantsPreset]
        Constants preset or its name. Defaults to ``'desk'``.
    ell : Optional[int]
        Support hop radius. Defaults to the preset's ``hop_radius``.
    tree : Optional[DecompTree]
        A decomposition of ``g`` over ``X``. Built when omitted.
    logger : Optional[logging.Logger]
        Logger. Defaults to the package logger.

    Returns
    -------
    CentroidSet
        The centroid set.

    Raises
    ------
    InvalidParameterError
        If ``eps``, ``z``, ``X`` or ``A`` are out of range.
    """
    logger = get_logger(logger)
    if not 0 < eps < 1:
        raise InvalidParameterError('eps', eps, 'Expected 0 < eps < 1.')
    if z < 1:
        raise InvalidParameterError('z', z, 'The cost exponent must be at least 1.')
    X = np.unique(np.asarray(X, dtype=np.int64))
    A = np.unique(np.asarray(A, dtype=np.int64))
    if len(X) == 0:
        raise InvalidParameterError('X', X.tolist(), 'At least one client is required.')
    if len(A) == 0:
        raise InvalidParameterError('A', A.tolist(), 'The reference solution must be non-empty.')
    preset = get_preset(preset) if isinstance(preset, str) else preset
    alpha = declared_stretch(g.metric)
    if alpha is None:
        alpha = tree.root.spanner.alpha if tree is not None and tree.root.spanner is not None else \
            family_spanner(g).alpha
    if ell is None:
        ell = preset.hop_radius(eps, z, alpha, g.metric.c1p, g.metric.c2p)
    cs = CentroidSet(g, X, A, eps, z, preset, alpha, ell)
    cs.net, cs.nets = build_c_net(g, X, A, eps, z)
    support = None if g.metric.family == Family.HOP_UDG else SupportGraph.build(g, preset.support_mu(eps, z))
    cs.support, cs.support_graph = build_c_support(g, X, eps, z, ell, support)
    cs.tree = build_tree(g, X, logger=logger) if tree is None else tree
    cs.r_prime = long_path_mask(g, X, ell)
    build_c_landmark(cs, logger)
    logger.info('Centroid set: %d net, %d support, %d landmark, %d total (ell=%d).', len(cs.net), len(cs.support),
                len(cs.landmark), len(cs), ell)
    return cs


class Rule(IntEnum):
    """Replacement rules, applied in this order.

    Values are::

        NET = 0       # Nearest net point of the best cheap client.
        NET_SUB = 1   # A net replacement already chosen for another center.
        SUPPORT = 2   # The special point f(s).
        LANDMARK = 3  # The representative sharing the canonical tuple of s.
    """
    NET = 0
    NET_SUB = 1
    SUPPORT = 2
    LANDMARK = 3


class Replacement:
    """A solution ``S`` and its replacement ``S~`` inside the centroid set.

    Attributes
    ----------
    original : List[int]
        ``S`` sorted.
    rho : Dict[int, int]
        The replacement of every center.
    rules : Dict[int, Rule]
        The rule that produced it.
    """

    __slots__ = ['original', 'rho', 'rules']

    def __init__(self, original: List[int], rho: Dict[int, int], rules: Dict[int, Rule]):
        self.original = original
        self.rho = rho
        self.rules = rules

    @property
    def centers(self) -> List[int]:
        return sorted(set(self.rho.values()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'s': self.original,
                             'rule': [self.rules[s].name for s in self.original],
                             'rho': [self.rho[s] for s in self.original]})

    def __repr__(self) -> str:
        return f'Replacement({self.rho})'


def _clusters(g: GraphInstance, X: np.ndarray, S: List[int]) -> Dict[int, np.ndarray]:
    _, owner = nearest_center(g, X, S)
    return {s: X[owner == s] for s in S}


def replace_solution(S: Sequence[int], cs: CentroidSet, logger: Optional[logging.Logger] = None) -> Replacement:
    """Replaces every center of ``S`` by a member of the centroid set.

    Rules are tried in the order ``NET``, ``NET_SUB``, ``SUPPORT``, ``LANDMARK``. A center is relevant to the net
    rules through ``X'_s``, its clients ``q`` with ``d(q, A) < 1`` and ``d(q, s) <= (10z/eps) d(q, A)``.

    Raises
    ------
    InvalidParameterError
        If ``S`` is empty.
    InvariantViolationError
        If a center reaches the landmark rule without being a long-path vertex.
    """
    logger = get_logger(logger)
    S = sorted({int(s) for s in S})
    if not S:
        raise InvalidParameterError('S', S, 'The solution must be non-empty.')
    g, dA, eps, z = cs.graph, cs.dA, cs.eps, cs.z
    oracle = g.oracle
    clusters = _clusters(g, cs.X, S)
    rho, rules = {}, {}
    radius = 10.0 * z / eps

    if g.metric.family != Family.HOP_UDG:
        for s in S:
            xs = clusters[s]
            row = oracle.row(s)
            rel = xs[(dA[xs] < 1) & (row[xs] <= radius * dA[xs])]
            if len(rel) == 0:
                continue
            score = dA[rel] + row[rel]
            p_i = int(rel[int(np.argmin(score))])
            rho[s] = cs.nets[p_i].nearest(s, row)
            rules[s] = Rule.NET

    in_support = np.zeros(g.n, dtype=bool)
    in_support[cs.support] = True
    f = cs.support_graph.f
    net_centers = [s for s in S if rules.get(s) == Rule.NET]
    for s in S:
        if s in rho or not in_support[f[s]]:
            continue
        fs = int(f[s])
        row_fs = oracle.row(fs)
        substitute = None
        for s_q in net_centers:
            if s_q == s:
                continue
            xs = clusters[s_q]
            near = xs[oracle.row(s_q)[xs] <= eps / z]
            better = near[oracle.row(rho[s_q])[near] > row_fs[near]]
            if len(better):
                substitute = rho[s_q]
                break
        if substitute is not None:
            rho[s], rules[s] = substitute, Rule.NET_SUB
        else:
            rho[s], rules[s] = fs, Rule.SUPPORT

    for s in S:
        if s in rho:
            continue
        if not cs.r_prime[s]:
            raise InvariantViolationError('long-path', f'center {s} is outside C_support but within {cs.ell} hops '
                                                       f'of a client.')
        leaf = root_leaf_path(cs.tree, s)[-1].id
        rho[s], rules[s] = cs.groups[(leaf, canonical_tuple(s, cs))], Rule.LANDMARK

    counts = {r.name: sum(1 for v in rules.values() if v == r) for r in Rule}
    logger.debug('Replacement rules used: %s.', counts)
    return Replacement(S, rho, rules)


def error_frame(cs: CentroidSet, replacement: Replacement) -> pd.DataFrame:
    """Per-client comparison of ``cost(p, S)`` and ``cost(p, S~)``.

    A client is relevant when ``cost(p, S) <= (10z/eps)^z cost(p, A)`` and its error bound is
    ``eps / (z log(z/eps)) * (cost(p, S) + cost(p, A))``.
    """
    g, z, eps = cs.graph, cs.z, cs.eps
    d_s, _ = nearest_center(g, cs.X, replacement.original)
    d_t, _ = nearest_center(g, cs.X, replacement.centers)
    cost_s, cost_t, cost_a = d_s ** z, d_t ** z, cs.dA[cs.X] ** z
    factor = eps / (z * math.log(z / eps))
    frame = pd.DataFrame({
        'p': cs.X,
        'cost_S': cost_s,
        'cost_St': cost_t,
        'cost_A': cost_a,
        'relevant': cost_s <= (10.0 * z / eps) ** z * cost_a,
        'bound': factor * (cost_s + cost_a),
    })
    frame['error'] = (frame['cost_S'] - frame['cost_St']).abs()
    frame['ok'] = ~frame['relevant'] | (frame['error'] <= frame['bound'] * (1 + 1e-9) + 1e-12)
    return frame


def centroid_errors(cs: CentroidSet, replacement: Replacement) -> PropertyReport:
    """Checks the per-client centroid error bound on every relevant client."""
    frame = error_frame(cs, replacement)
    report = PropertyReport('centroid-error')
    relevant = frame[frame['relevant']]
    report.checked = len(relevant)
    for row in relevant[~relevant['ok']].itertuples():
        report.violations.append(('error', int(row.p), float(row.error), float(row.bound)))
    return report


def pass_rate(report: PropertyReport) -> float:
    return 1.0 if report.checked == 0 else 1.0 - len(report.violations) / report.checked


def replacement_claims(cs: CentroidSet, replacement: Replacement, tol: float = 1e-9) -> PropertyReport:
    """Checks the forward and backward replacement bounds.

    Forward, for every client ``p`` of a center ``s`` with ``d(p, s) <= (10z/eps) d(p, A)``:

    * ``NET``: ``|d(p, s~) - d(p, s)| <= (eps/z)(d(p, s) + d(p, A))``,
    * ``NET_SUB`` and ``SUPPORT``: ``d(p, S~) <= d(p, s) + 8 (eps/z) d(p, A)``.

    For ``LANDMARK`` centers and every client, both directions of the dichotomy with threshold
    ``gamma z d(p, A) / eps``. Backward, for clients whose nearest replacement ``s~1`` is within ``(10z/eps) d(p, A)``:

    * ``d(p, A) < 1``: ``d(p, S) <= (1 + 8 eps/z) d(p, s~1) + 8 (eps/z) d(p, A)``,
    * ``d(p, A) >= 1`` and ``s~1`` replaces a ``NET`` or ``SUPPORT`` center: ``d(p, S) <= d(p, s~1) + (eps/z) d(p, A)``.
    """
    report = PropertyReport('replacement-claims')
    g, eps, z, dA = cs.graph, cs.eps, cs.z, cs.dA
    oracle = g.oracle
    e = eps / z
    radius = 10.0 * z / eps
    gamma = cs.preset.gamma_landmark
    S = replacement.original
    clusters = _clusters(g, cs.X, S)
    d_tilde, _ = nearest_center(g, cs.X, replacement.centers)
    d_tilde = dict(zip(cs.X.tolist(), d_tilde.tolist()))

    for s in S:
        rule, st = replacement.rules[s], replacement.rho[s]
        row_s, row_t = oracle.row(s), oracle.row(st)
        targets = cs.X if rule == Rule.LANDMARK else clusters[s]
        for p in targets.tolist():
            ds, dt, da = float(row_s[p]), float(row_t[p]), float(dA[p])
            slack = tol * max(1.0, ds, dt)
            if rule == Rule.LANDMARK:
                report.checked += 1
                if ds < gamma * z * da / eps and dt > (1 + e) * ds + e * da + slack:
                    report.violations.append(('landmark-forward', s, p, dt, ds))
                if dt < gamma * z * da / eps and ds > (1 + e) * dt + e * da + slack:
                    report.violations.append(('landmark-backward', s, p, ds, dt))
                continue
            if ds > radius * da:
                continue
            report.checked += 1
            if rule == Rule.NET and abs(dt - ds) > e * (ds + da) + slack:
                report.violations.append(('net', s, p, dt, ds))
            elif rule in (Rule.NET_SUB, Rule.SUPPORT) and d_tilde[p] > ds + CLAIM_CONSTANT * e * da + slack:
                report.violations.append((rule.name.lower(), s, p, d_tilde[p], ds))

    owners = {}
    for s in S:
        owners.setdefault(replacement.rho[s], []).append(s)
    d_orig, _ = nearest_center(g, cs.X, S)
    _, nearest_t = nearest_center(g, cs.X, replacement.centers)
    for p, dp_s, t1 in zip(cs.X.tolist(), d_orig.tolist(), nearest_t.tolist()):
        dt, da = d_tilde[p], float(dA[p])
        if dt > radius * da:
            continue
        slack = tol * max(1.0, dt, dp_s)
        if da < 1:
            report.checked += 1
            if dp_s > (1 + CLAIM_CONSTANT * e) * dt + CLAIM_CONSTANT * e * da + slack:
                report.violations.append(('backward-1', p, dp_s, dt))
        elif any(replacement.rules[s] in (Rule.NET, Rule.SUPPORT) for s in owners[int(t1)]):
            report.checked += 1
            if dp_s > dt + e * da + slack:
                report.violations.append(('backward-2', p, dp_s, dt))
    return report


def check_landmarks(cs: CentroidSet, tol: float = 1e-9) -> PropertyReport:
    """Checks that every ``x in Q_ij`` has a landmark within path distance ``mu^2 D``."""
    report = PropertyReport('landmarks')
    for lms in cs.landmark_sets():
        if not lms.Q:
            continue
        pos = np.array([lms.positions[l] for l in lms.landmarks])
        step = lms.mu ** 2 * lms.D
        for x in lms.Q:
            report.checked += 1
            gap = float(np.min(np.abs(pos - lms.positions[x]))) if len(pos) else math.inf
            if gap > step * (1 + tol) + tol:
                report.violations.append(('uncovered', lms.region, lms.path_index, x, gap, step))
    return report


def check_landmark_groups(cs: CentroidSet) -> PropertyReport:
    """Recomputes every long-path vertex's tuple and checks it matches its group's representative."""
    report = PropertyReport('landmark-groups')
    for s in np.nonzero(cs.r_prime)[0].tolist():
        report.checked += 1
        leaf = root_leaf_path(cs.tree, s)[-1].id
        key = canonical_tuple(s, cs)
        rep = cs.groups.get((leaf, key))
        if rep is None or canonical_tuple(rep, cs) != key:
            report.violations.append(('group', s, rep))
    return report
