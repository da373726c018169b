import itertools as itt
import json
import logging
import math
import time

import numpy as np

from functools import lru_cache, partial
from multiprocessing import Pool
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from IGCoreset.Core import BudgetExceededError, ConstantsPreset, InvalidParameterError, get_logger
from IGCoreset.Coresets import WeightedCoreset, collapse_clients, iterative_coreset
from IGCoreset.Graphs import GraphInstance, cost

# Largest value of |Y| * log2(k) the partition enumeration accepts.
FPT_GUARD = 24.0
# Largest number of k-subsets brute force will scan.
BRUTE_BUDGET = 10 ** 6
# Length of the partition prefixes handed to workers.
PREFIX_LENGTH = 4


class ClusteringResult:
    """A ``k``-center solution and how it was found.

    Attributes
    ----------
    centers : List[int]
        Sorted center vertices.
    cost : float
        Cost on the full client set.
    method : str
        ``'fpt'``, ``'brute'`` or ``'approx'``.
    wall_time : float
        Seconds spent.
    extra : Dict[str, Any]
        Method details (coreset size, partitions visited, subsets scanned).
    """

    __slots__ = ['centers', 'cost', 'method', 'wall_time', 'extra']

    def __init__(self, centers: Sequence[int], cost: float, method: str, wall_time: float = 0.0,
                 extra: Optional[Dict[str, Any]] = None):
        self.centers = sorted(int(c) for c in centers)
        self.cost = float(cost)
        self.method = method
        self.wall_time = wall_time
        self.extra = {} if extra is None else extra

    def check(self, g: GraphInstance, X: Sequence[int], z: int) -> bool:
        """Recomputes the cost of the centers on ``X``."""
        return math.isclose(cost(g, X, self.centers, z), self.cost, rel_tol=1e-9, abs_tol=1e-12)

    def to_dict(self, timings: bool = True) -> Dict[str, Any]:
        data = {'centers': self.centers, 'cost': self.cost, 'method': self.method, **self.extra}
        if timings:
            data['wall_time'] = self.wall_time
        return data

    def dump(self, path: str, timings: bool = True):
        with open(path, 'w') as json_file:
            json.dump(self.to_dict(timings), json_file, indent=1)

    def __repr__(self) -> str:
        return f'ClusteringResult(method={self.method}, centers={self.centers}, cost={self.cost:.6g})'


@lru_cache(maxsize=None)
def stirling2(n: int, j: int) -> int:
    """Stirling number of the second kind ``S(n, j)``."""
    if n == j:
        return 1
    if j == 0 or j > n:
        return 0
    return j * stirling2(n - 1, j) + stirling2(n - 1, j - 1)


def count_partitions(n: int, k: int) -> int:
    """Number of set partitions of ``n`` items into at most ``k`` non-empty blocks."""
    if n == 0:
        return 1
    return sum(stirling2(n, j) for j in range(1, min(n, k) + 1))


def restricted_growth_strings(n: int, k: int, prefix: Sequence[int] = ()) -> Iterator[Tuple[int, ...]]:
    """Yields every restricted growth string of length ``n`` with values below ``k`` that starts with ``prefix``.

    ``a[0] = 0`` and ``a[i] <= 1 + max(a[:i])``, so each set partition into at most ``k`` blocks appears once::

        list(restricted_growth_strings(3, 2))
        # [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1)]
    """
    if n == 0:
        yield ()
        return
    a = list(prefix) if prefix else [0]
    top = [0] * n
    for i in range(1, len(a)):
        top[i] = max(top[i - 1], a[i])

    def extend(i: int):
        if i == n:
            yield tuple(a)
            return
        for v in range(min(top[i - 1] + 1, k - 1) + 1):
            a.append(v)
            top[i] = max(top[i - 1], v)
            yield from extend(i + 1)
            a.pop()

    yield from extend(len(a))


def _best_completion(columns: np.ndarray, k: int, prefix: Tuple[int, ...]) -> Tuple[float, Tuple[int, ...], int]:
    """Best partition extending ``prefix``. ``columns[v, j]`` is ``omega(y_j) d(v, y_j)^z``.

    Block cost sums are maintained incrementally along the depth-first enumeration.
    """
    n, size = columns.shape
    sums = np.zeros((k, n))
    a = list(prefix)
    for j, b in enumerate(a):
        sums[b] += columns[:, j]
    best = [math.inf, tuple(a), 0]

    def visit(i: int, top: int):
        if i == size:
            best[2] += 1
            value = float(sums[:top + 1].min(axis=1).sum())
            if value < best[0]:
                best[0], best[1] = value, tuple(a)
            return
        for b in range(min(top + 1, k - 1) + 1):
            sums[b] += columns[:, i]
            a.append(b)
            visit(i + 1, max(top, b))
            a.pop()
            sums[b] -= columns[:, i]

    visit(len(a), max(a) if a else -1)
    return best[0], best[1], best[2]


def _partition_centers(columns: np.ndarray, rgs: Tuple[int, ...]) -> List[int]:
    used = max(rgs) + 1 if rgs else 0
    centers = []
    for b in range(used):
        members = [j for j, v in enumerate(rgs) if v == b]
        centers.append(int(np.argmin(columns[:, members].sum(axis=1))))
    return sorted(set(centers))


def _pad_centers(centers: List[int], k: int, n: int) -> List[int]:
    chosen = sorted(set(centers))
    fill = (v for v in range(n) if v not in chosen)
    while len(chosen) < min(k, n):
        chosen.append(next(fill))
    return sorted(chosen)


def enumerate_partitions(columns: np.ndarray, k: int, processes: int = 1) -> Tuple[List[int], float, int]:
    """Finds the partition of the coreset members with the cheapest best-center-per-block cost.

    Work is split over the restricted growth prefixes of length ``PREFIX_LENGTH``. Results are reduced by
    ``(cost, centers)`` so the answer does not depend on ``processes``.

    Returns
    -------
    Tuple[List[int], float, int]
        Block centers, their weighted cost on the coreset and the number of partitions visited.
    """
    size = columns.shape[1]
    prefixes = list(restricted_growth_strings(min(size, PREFIX_LENGTH), k))
    work = partial(_best_completion, columns, k)
    if processes == 1:
        results = [work(p) for p in prefixes]
    else:
        with Pool(processes) as pool:
            results = pool.map(work, prefixes)
    best_key, visited = None, 0
    for value, rgs, count in results:
        visited += count
        key = (value, _partition_centers(columns, rgs))
        if best_key is None or key < best_key:
            best_key = key
    return best_key[1], best_key[0], visited


def fpt_cluster(g: GraphInstance, X: Sequence[int], k: int, z: int = 1, eps: float = 0.3,
                seed: Optional[int] = None, delta: float = 0.1, preset: Union[str, ConstantsPreset] = 'desk',
                coreset: Optional[WeightedCoreset] = None, guard: float = FPT_GUARD, processes: int = 1,
                logger: Optional[logging.Logger] = None) -> ClusteringResult:
    """Approximates the ``(k, z)``-clustering of ``X`` by enumerating the partitions of a coreset.

    Every partition of the coreset members into at most ``k`` blocks is visited once. Each block gets the vertex of
    ``V`` minimising its weighted cost, and the cheapest partition's centers are returned with their cost on ``X``::

        result = fpt_cluster(g, X, k=2, z=1, eps=0.3, seed=7)

    ``k = 1`` scans ``V`` exactly without building a coreset.

    Parameters
    ----------
    g : GraphInstance
        The host graph.
    X : Sequence[int]
        Clients.
    k : int
        Number of centers.
    z : int
        Cost exponent. Defaults to ``1``.
    eps : float
        Coreset precision. Defaults to ``0.3``.
    seed : Optional[int]
        Root seed of the coreset.
    delta : float
        Coreset failure probability. Defaults to ``0.1``.
    preset : Union[str, ConstantsPreset]
        Constants preset. Defaults to ``'desk'``.
    coreset : Optional[WeightedCoreset]
        A prebuilt coreset of ``X``.
    guard : float
        Largest ``|Y| log2 k`` accepted. Defaults to ``24``.
    processes : int
        Worker processes for the enumeration. Defaults to ``1``.
    logger : Optional[logging.Logger]
        Logger. Defaults to the package logger.

    Returns
    -------
    ClusteringResult
        The best solution found.

    Raises
    ------
    InvalidParameterError
        If ``k`` is outside ``1..|X|``.
    BudgetExceededError
        If the coreset is too large to enumerate.
    """
    logger = get_logger(logger)
    start = time.perf_counter()
    if not 1 <= k <= len(X):
        raise InvalidParameterError('k', k, f'Expected 1 <= k <= |X| = {len(X)}.')
    full = g.oracle.full()
    if k == 1:
        clients, w = collapse_clients(X)
        with np.errstate(invalid='ignore'):
            totals = ((full[:, clients] ** z) * w).sum(axis=1)
        center = int(np.argmin(totals))
        return ClusteringResult([center], float(totals[center]), 'fpt', time.perf_counter() - start,
                                {'coreset_size': 0, 'partitions': 0})
    if coreset is None:
        coreset = iterative_coreset(g, X, k, z, eps, delta, seed, preset, logger=logger)
    size = len(coreset)
    demand = size * math.log2(k)
    if demand > guard:
        raise BudgetExceededError(f'Partition enumeration of a coreset of size {size}', round(demand, 3), guard)
    with np.errstate(invalid='ignore'):
        columns = (full[:, coreset.members] ** z) * coreset.weights
    centers, _, visited = enumerate_partitions(columns, k, processes)
    centers = _pad_centers(centers, k, g.n)
    total = cost(g, X, centers, z)
    logger.info('FPT search visited %d partitions of a coreset of size %d, cost %.6g.', visited, size, total)
    return ClusteringResult(centers, total, 'fpt', time.perf_counter() - start,
                            {'coreset_size': size, 'partitions': visited})


def brute_force(g: GraphInstance, X: Sequence[int], k: int, z: int = 1, budget: int = BRUTE_BUDGET,
                chunk: int = 4096) -> ClusteringResult:
    """Exact optimum over every ``k``-subset of ``V``. Ties go to the lexicographically smallest subset.

    Raises
    ------
    InvalidParameterError
        If ``k`` is outside ``1..|V|``.
    BudgetExceededError
        If ``C(|V|, k)`` exceeds ``budget``.
    """
    start = time.perf_counter()
    if not 1 <= k <= g.n:
        raise InvalidParameterError('k', k, f'Expected 1 <= k <= |V| = {g.n}.')
    subsets = math.comb(g.n, k)
    if subsets > budget:
        raise BudgetExceededError('Brute force', subsets, budget)
    clients, w = collapse_clients(X)
    with np.errstate(invalid='ignore'):
        P = g.oracle.full()[:, clients] ** z
    best_value, best_centers = math.inf, None
    combos = itt.combinations(range(g.n), k)
    while True:
        block = np.array(list(itt.islice(combos, chunk)), dtype=np.int64).reshape(-1, k)
        if len(block) == 0:
            break
        with np.errstate(invalid='ignore'):
            values = (P[block].min(axis=1) * w).sum(axis=1)
        i = int(np.argmin(values))
        if best_centers is None or values[i] < best_value:
            best_value, best_centers = float(values[i]), block[i].tolist()
    return ClusteringResult(best_centers, best_value, 'brute', time.perf_counter() - start, {'subsets': subsets})
