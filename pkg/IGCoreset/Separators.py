import logging
import math

import numpy as np

from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError
from typing import List, Optional, Sequence, Set, Tuple, Union

from IGCoreset.Core import (BalanceError, InvalidParameterError, InvariantViolationError, PreconditionError,
                            TrivialRegionError, get_logger)
from IGCoreset.Graphs import TIE_TOL, GraphInstance, shortest_paths
from IGCoreset.Spanners import PlanarSpanner, _orient

# Largest number of shortest paths a separator may use.
B_MAX = 2
# Balance the separator aims for and the balance it accepts.
TARGET_BALANCE = 0.5
ACCEPTED_BALANCE = 2.0 / 3.0


class SeparatorResult:
    """Shortest paths of a planar graph whose removal splits its marked weight.

    Attributes
    ----------
    paths : List[List[int]]
        Vertex sequences, each a shortest path of the graph. They are pairwise vertex-disjoint.
    balance : float
        Largest component weight left after removal, divided by the total weight.
    root : int
        Root of the shortest-path tree the paths come from.
    total : float
        Total marked weight.
    """

    __slots__ = ['paths', 'balance', 'root', 'total']

    def __init__(self, paths: List[List[int]], balance: float, root: int, total: float):
        self.paths = paths
        self.balance = balance
        self.root = root
        self.total = total

    @property
    def b(self) -> int:
        return len(self.paths)

    def vertices(self) -> np.ndarray:
        """Sorted union of the path vertices."""
        if not self.paths:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate([np.asarray(p, dtype=np.int64) for p in self.paths]))

    def to_dict(self) -> dict:
        return {'paths': [list(map(int, p)) for p in self.paths], 'balance': self.balance, 'root': self.root,
                'total': self.total}

    def __repr__(self) -> str:
        return f'SeparatorResult(b={self.b}, balance={self.balance:.4f}, root={self.root})'


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    __slots__ = ['parent', 'size']

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


def component_weights(g: GraphInstance, removed: Sequence[int], weights: np.ndarray) -> List[float]:
    """Weights of the connected components of ``g`` minus ``removed``, recounted with a union-find pass."""
    gone = np.zeros(g.n, dtype=bool)
    gone[np.asarray(removed, dtype=np.int64)] = True
    uf = UnionFind(g.n)
    u, v, _ = g.edges()
    for a, b in zip(u.tolist(), v.tolist()):
        if not gone[a] and not gone[b]:
            uf.union(a, b)
    totals = {}
    for x in range(g.n):
        if not gone[x]:
            r = uf.find(x)
            totals[r] = totals.get(r, 0.0) + float(weights[x])
    return sorted(totals.values(), reverse=True)


def _crosses(p: np.ndarray, q: np.ndarray, a: np.ndarray, b: np.ndarray) -> bool:
    """``True`` if segment ``pq`` properly crosses any segment ``a[i] b[i]``."""
    if len(a) == 0:
        return False
    o1 = _orient(np.broadcast_to(p, a.shape), np.broadcast_to(q, a.shape), a)
    o2 = _orient(np.broadcast_to(p, a.shape), np.broadcast_to(q, a.shape), b)
    o3 = _orient(a, b, np.broadcast_to(p, a.shape))
    o4 = _orient(a, b, np.broadcast_to(q, a.shape))
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


def triangulated_supergraph(g: GraphInstance) -> Set[Tuple[int, int]]:
    """Extends the planar straight-line graph ``g`` to a maximal planar graph.

    Point pairs are inserted shortest first whenever they cross no edge already present, which completes a
    triangulation of the convex hull. The outer face is then closed by a fan from the first hull vertex, so the result
    has at most ``3n - 6`` edges and reaches it unless a fan chord was already a hull diagonal.
    """
    coords = g.points.perturbed()
    n = g.n
    u, v, _ = g.edges()
    edges = set(zip(u.tolist(), v.tolist()))
    if n < 3:
        return edges
    try:
        hull = ConvexHull(coords).vertices.tolist()
    except QhullError:
        hull = []
    target = 3 * n - 3 - len(hull) if hull else n - 1
    cap = max(target, len(edges)) + 1
    seg_a, seg_b = np.zeros((cap, 2)), np.zeros((cap, 2))
    used = 0
    for a, b in sorted(edges):
        seg_a[used], seg_b[used] = coords[a], coords[b]
        used += 1
    iu, iv = np.triu_indices(n, k=1)
    length = np.hypot(coords[iu, 0] - coords[iv, 0], coords[iu, 1] - coords[iv, 1])
    for idx in np.lexsort((iv, iu, length)):
        if len(edges) >= target:
            break
        a, b = int(iu[idx]), int(iv[idx])
        if (a, b) in edges or _crosses(coords[a], coords[b], seg_a[:used], seg_b[:used]):
            continue
        edges.add((a, b))
        seg_a[used], seg_b[used] = coords[a], coords[b]
        used += 1
    if len(hull) > 3:
        apex = hull[0]
        for w in hull[2:-1]:
            edges.add((min(apex, w), max(apex, w)))
    return edges


def _score(g: GraphInstance, removed: np.ndarray, weights: np.ndarray) -> float:
    keep = np.ones(g.n, dtype=bool)
    keep[removed] = False
    if not np.any(keep):
        return 0.0
    idx = np.nonzero(keep)[0]
    _, labels = connected_components(g.csr[idx][:, idx], directed=False)
    return float(np.bincount(labels, weights=weights[idx]).max())


def _path_weight(g: GraphInstance, path: Sequence[int]) -> float:
    return sum(g.edge_weight(a, b) for a, b in zip(path, path[1:]))


def sp_separator(h: Union[PlanarSpanner, GraphInstance], weights: Sequence[float], b_max: int = B_MAX,
                 logger: Optional[logging.Logger] = None) -> SeparatorResult:
    """Finds at most ``b_max`` vertex-disjoint shortest paths of ``h`` whose removal leaves components of marked
    weight at most ``2/3`` of the total, aiming for ``1/2``.

    The paths come from a shortest-path tree rooted at the vertex of largest distance to the marked vertices. A
    candidate is either one tree path from the root, or the two tree paths bounding the fundamental cycle of a
    non-tree edge of the triangulated supergraph of ``h``. The candidate meeting ``1/2`` with fewest paths wins,
    otherwise the best balanced one.

    Parameters
    ----------
    h : Union[PlanarSpanner, GraphInstance]
        A connected planar graph.
    weights : Sequence[float]
        ``0/1`` weight per vertex.
    b_max : int
        Largest number of paths. Defaults to ``2``.
    logger : Optional[logging.Logger]
        Logger for diagnostics. Defaults to the package logger.

    Returns
    -------
    SeparatorResult
        The separator.

    Raises
    ------
    TrivialRegionError
        If the total weight is below 3.
    PreconditionError
        If ``h`` is disconnected.
    BalanceError
        If no candidate reaches balance ``2/3``.
    InvariantViolationError
        If an emitted path is not a shortest path.
    """
    logger = get_logger(logger)
    g = h.graph if isinstance(h, PlanarSpanner) else h
    weights = np.asarray(weights, dtype=float)
    if len(weights) != g.n:
        raise InvalidParameterError('weights', len(weights), f'Expected one weight per vertex ({g.n}).')
    if b_max < 1:
        raise InvalidParameterError('b_max', b_max, 'At least one path is required.')
    total = float(weights.sum())
    if total < 3:
        raise TrivialRegionError(total)
    count, _ = g.components()
    if count > 1:
        raise PreconditionError('sp_separator', f'the graph has {count} components.')

    marked = np.nonzero(weights > 0)[0]
    ecc = g.oracle.rows(marked).max(axis=0)
    root = int(np.argmax(ecc))
    tree = shortest_paths(g, root)
    parent = tree.parent
    depth = tree.hops

    def ancestors(x: int) -> List[int]:
        chain = [x]
        while chain[-1] != root:
            chain.append(int(parent[chain[-1]]))
        return chain

    candidates = []
    for x in range(g.n):
        path = ancestors(x)[::-1]
        candidates.append([path])
    if b_max >= 2:
        tree_edges = {(min(x, int(parent[x])), max(x, int(parent[x]))) for x in range(g.n) if x != root}
        for a, b in sorted(triangulated_supergraph(g) - tree_edges):
            if depth[a] < depth[b]:
                a, b = b, a
            up_a = ancestors(a)
            up_b = ancestors(b)
            on_a = set(up_a)
            lca_pos = next(i for i, y in enumerate(up_b) if y in on_a)
            first = up_a[::-1]
            second = up_b[:lca_pos][::-1]
            candidates.append([first, second] if second else [first])

    best, best_key = None, None
    half = TARGET_BALANCE * total
    for paths in candidates:
        removed = np.unique(np.concatenate([np.asarray(p, dtype=np.int64) for p in paths]))
        worst = _score(g, removed, weights)
        key = (worst > half + TIE_TOL, len(paths), worst, len(removed), [tuple(p) for p in paths])
        if best_key is None or key < best_key:
            best, best_key = paths, key
    worst = best_key[2]
    balance = worst / total
    if balance > ACCEPTED_BALANCE + TIE_TOL:
        raise BalanceError(balance)

    for path in best:
        check = shortest_paths(g, path[0])
        length = _path_weight(g, path)
        if abs(length - check.dist[path[-1]]) > TIE_TOL * max(1.0, length) * 10:
            raise InvariantViolationError('shortest-separator-path',
                                          f'path {path[0]}->{path[-1]} has weight {length} > {check.dist[path[-1]]}.')
    recount = component_weights(g, np.concatenate([np.asarray(p, dtype=np.int64) for p in best]), weights)
    if recount and recount[0] > worst + TIE_TOL * max(1.0, total):
        raise InvariantViolationError('separator-balance', f'recount {recount[0]} differs from {worst}.')
    logger.debug('Separator rooted at %d uses %d path(s) with balance %.3f of total %g.', root, len(best), balance,
                 total)
    return SeparatorResult(best, balance, root, total)


def depth_bound(marked: int, balance: float = ACCEPTED_BALANCE) -> float:
    """Height bound ``log_{1/balance} |X| + 2`` of a decomposition splitting marked weight by ``balance``."""
    if marked <= 2:
        return 1.0
    return math.log(marked) / math.log(1.0 / balance) + 2.0
