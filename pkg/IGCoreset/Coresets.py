import json
import logging
import math

import numpy as np
import pandas as pd

from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from IGCoreset.Core import (ConstantsPreset, DisconnectedError, InvalidParameterError, InvariantViolationError,
                            derive_rng, get_logger, get_preset)
from IGCoreset.Graphs import GraphInstance, ball, cost, nearest_center

# Local search stops after this many improving swaps.
MAX_SWAP_ROUNDS = 100
# A swap must improve the cost by a factor (1 - SWAP_GAIN / k).
SWAP_GAIN = 1e-3


def collapse_clients(X: Sequence[int], weights: Optional[Sequence[float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Merges repeated clients into sorted distinct vertices carrying their total weight.

    Raises
    ------
    InvalidParameterError
        If the weights do not align with ``X`` or are not positive.
    """
    X = np.asarray(X, dtype=np.int64).reshape(-1)
    w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if len(w) != len(X):
        raise InvalidParameterError('weights', len(w), f'Expected one weight per client ({len(X)}).')
    if np.any(w <= 0):
        raise InvalidParameterError('weights', float(w.min()), 'Client weights must be positive.')
    vertices, inverse = np.unique(X, return_inverse=True)
    return vertices, np.bincount(inverse.reshape(-1), weights=w, minlength=len(vertices))


class ApproxSolution:
    """A constant-factor seed solution.

    Attributes
    ----------
    centers : List[int]
        The ``k`` centers, sorted.
    clients : numpy.ndarray
        Distinct client vertices.
    weights : numpy.ndarray
        Client weights aligned with ``clients``.
    assignment : numpy.ndarray
        Nearest center of every client, smallest center on ties.
    cost : float
        ``sum w(p) d(p, centers)^z``.
    z : int
        Cost exponent.
    """

    __slots__ = ['centers', 'clients', 'weights', 'assignment', 'cost', 'z']

    def __init__(self, g: GraphInstance, centers: Sequence[int], clients: np.ndarray, weights: np.ndarray, z: int):
        self.centers = sorted(int(c) for c in centers)
        self.clients = clients
        self.weights = weights
        self.z = z
        d, self.assignment = nearest_center(g, clients, self.centers)
        with np.errstate(invalid='ignore'):
            self.cost = float(np.sum(weights * d ** z))

    @property
    def k(self) -> int:
        return len(self.centers)

    def check(self, g: GraphInstance) -> bool:
        """Recomputes the cost and compares it with the stored value."""
        fresh = cost(g, self.clients, self.centers, self.z, self.weights)
        if math.isinf(fresh) or math.isinf(self.cost):
            return fresh == self.cost
        return math.isclose(fresh, self.cost, rel_tol=1e-9, abs_tol=1e-12)

    def to_dict(self) -> Dict[str, Any]:
        return {'centers': self.centers, 'cost': self.cost, 'z': self.z}

    def __repr__(self) -> str:
        return f'ApproxSolution(centers={self.centers}, cost={self.cost:.6g})'


def _seed_centers(P: np.ndarray, w: np.ndarray, k: int, rng: np.random.Generator) -> List[int]:
    """D^z seeding over the candidate rows of ``P``. Clients at infinite distance are drawn first."""
    n = P.shape[0]
    clients = P.shape[1]
    first = int(rng.choice(clients, p=w / w.sum()))
    centers = [int(np.argmin(P[:, first]))]
    best = P[centers[0]].copy()
    while len(centers) < k:
        far = np.isinf(best)
        if np.any(far):
            mass = np.where(far, w, 0.0)
        else:
            mass = w * best
        if mass.sum() <= 0:
            break
        pick = int(rng.choice(clients, p=mass / mass.sum()))
        c = int(np.argmin(P[:, pick]))
        if c in centers:
            break
        centers.append(c)
        best = np.minimum(best, P[c])
    fill = (v for v in range(n) if v not in centers)
    while len(centers) < k:
        centers.append(next(fill))
    return centers


def local_search(P: np.ndarray, w: np.ndarray, centers: List[int], max_rounds: int = MAX_SWAP_ROUNDS
                 ) -> Tuple[List[int], float, int]:
    """Single-swap local search over the candidate rows of ``P``.

    ``P[v, j]`` is the powered distance from candidate ``v`` to client ``j``. A swap is taken when it lowers the cost
    below ``(1 - 1e-3/k)`` times the current cost. Among improving swaps the cheapest wins, then the lowest
    ``(old, new)`` pair.

    Returns
    -------
    Tuple[List[int], float, int]
        Sorted centers, their cost and the number of swaps made.
    """
    centers = sorted(centers)
    k = len(centers)
    with np.errstate(invalid='ignore'):
        current = float(np.sum(w * P[centers].min(axis=0)))
    factor = 1.0 - SWAP_GAIN / k
    rounds = 0
    while rounds < max_rounds:
        best_cost, best_swap = current, None
        for i, c in enumerate(centers):
            rest = centers[:i] + centers[i + 1:]
            base = P[rest].min(axis=0) if rest else np.full(P.shape[1], math.inf)
            with np.errstate(invalid='ignore'):
                totals = (np.minimum(base, P) * w).sum(axis=1)
            totals[centers] = math.inf
            v = int(np.argmin(totals))
            if totals[v] < best_cost:
                best_cost, best_swap = float(totals[v]), (c, v)
        if best_swap is None or not best_cost < factor * current:
            break
        centers = sorted(set(centers) - {best_swap[0]} | {best_swap[1]})
        current = best_cost
        rounds += 1
    return centers, current, rounds


def approx_solution(g: GraphInstance, X: Sequence[int], k: int, z: int = 1, seed: Optional[int] = None,
                    weights: Optional[Sequence[float]] = None) -> ApproxSolution:
    """Computes a constant-factor ``(k, z)``-clustering of ``X`` with centers anywhere in ``V``.

    ``k = 1`` is solved exactly by a scan over ``V``. When ``k`` covers every distinct client the clients are the
    centers. Otherwise ``D^z`` seeding is refined by single-swap local search::

        A = approx_solution(g, X, k=3, z=2, seed=7)

    Parameters
    ----------
    g : GraphInstance
        The host graph.
    X : Sequence[int]
        Clients, repetitions allowed.
    k : int
        Number of centers.
    z : int
        Cost exponent. Defaults to ``1``.
    seed : Optional[int]
        Seed of the ``approx`` stream.
    weights : Optional[Sequence[float]]
        Client weights. Defaults to unit weights.

    Returns
    -------
    ApproxSolution
        The solution.

    Raises
    ------
    InvalidParameterError
        If ``k`` is outside ``1..|X|`` or exceeds ``|V|``.
    """
    if z < 1:
        raise InvalidParameterError('z', z, 'The cost exponent must be at least 1.')
    if not 1 <= k <= len(X):
        raise InvalidParameterError('k', k, f'Expected 1 <= k <= |X| = {len(X)}.')
    if k > g.n:
        raise InvalidParameterError('k', k, f'The graph has only {g.n} vertices.')
    clients, w = collapse_clients(X, weights)
    with np.errstate(invalid='ignore'):
        P = g.oracle.full()[:, clients] ** z
    if k == 1:
        with np.errstate(invalid='ignore'):
            totals = (P * w).sum(axis=1)
        return ApproxSolution(g, [int(np.argmin(totals))], clients, w, z)
    if k >= len(clients):
        extra = [v for v in range(g.n) if v not in set(clients.tolist())][:k - len(clients)]
        return ApproxSolution(g, clients.tolist() + extra, clients, w, z)
    rng = derive_rng(seed, 'approx')
    centers = _seed_centers(P, w, k, rng)
    centers, _, _ = local_search(P, w, centers)
    return ApproxSolution(g, centers, clients, w, z)


class WeightedCoreset:
    """A weighted subset of ``V`` standing in for the clients.

    Attributes
    ----------
    members : numpy.ndarray
        Sorted distinct member vertices.
    weights : numpy.ndarray
        Positive weights aligned with ``members``.
    params : Dict[str, Any]
        Build parameters (``eps``, ``delta``, ``z``, ``k``, ``m``, ``seed`` and friends).
    sizes : List[int]
        Support sizes after every pass, the input first.
    ids : Optional[numpy.ndarray]
        Point ids of the members when known.
    reference : Optional[numpy.ndarray]
        Centers of the approximate solution the final sample was drawn against, when known.
    reference_ids : Optional[numpy.ndarray]
        Point ids of ``reference``.
    """

    __slots__ = ['members', 'weights', 'params', 'sizes', 'ids', 'reference', 'reference_ids']

    def __init__(self, members: np.ndarray, weights: np.ndarray, params: Optional[Dict[str, Any]] = None,
                 sizes: Optional[List[int]] = None, ids: Optional[np.ndarray] = None,
                 reference: Optional[Sequence[int]] = None, reference_ids: Optional[Sequence[int]] = None):
        members = np.asarray(members, dtype=np.int64)
        weights = np.asarray(weights, dtype=float)
        if len(members) != len(weights):
            raise InvalidParameterError('weights', len(weights), f'Expected {len(members)} weights.')
        if np.any(weights <= 0):
            raise InvalidParameterError('weights', float(weights.min()), 'Coreset weights must be positive.')
        order = np.argsort(members, kind='stable')
        self.members = members[order]
        self.weights = weights[order]
        self.params = {} if params is None else dict(params)
        self.sizes = [len(members)] if sizes is None else list(sizes)
        self.ids = None if ids is None else np.asarray(ids, dtype=np.int64)[order]
        self.reference = None if reference is None else np.asarray(reference, dtype=np.int64)
        if reference_ids is None:
            reference_ids = self.reference
        self.reference_ids = None if reference_ids is None else np.asarray(reference_ids, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def cost(self, g: GraphInstance, centers: Sequence[int], z: Optional[int] = None) -> float:
        """Weighted cost ``sum omega(y) d(y, centers)^z``."""
        return cost(g, self.members, centers, self.params.get('z', 1) if z is None else z, self.weights)

    def to_dict(self) -> Dict[str, Any]:
        ids = self.members if self.ids is None else self.ids
        data = {
            'members': [{'id': int(i), 'vertex': int(v), 'weight': float(w)}
                        for i, v, w in zip(ids, self.members, self.weights)],
            'params': self.params,
            'sizes': self.sizes,
        }
        if self.reference is not None:
            data['A'] = [{'id': int(i), 'vertex': int(v)} for i, v in zip(self.reference_ids, self.reference)]
        return data

    @staticmethod
    def from_dict(data: Dict[str, Any], g: Optional[GraphInstance] = None) -> 'WeightedCoreset':
        """Rebuilds a coreset from ``to_dict`` output. With ``g`` the vertices are resolved from the point ids."""
        rows = data['members']
        ids = np.array([r['id'] for r in rows], dtype=np.int64)
        if g is not None:
            vertices = np.array([g.points.index_of(int(i)) for i in ids], dtype=np.int64)
        else:
            vertices = np.array([r.get('vertex', r['id']) for r in rows], dtype=np.int64)
        weights = np.array([r['weight'] for r in rows], dtype=float)
        reference = reference_ids = None
        if data.get('A') is not None:
            reference_ids = [r['id'] for r in data['A']]
            if g is not None:
                reference = [g.points.index_of(int(i)) for i in reference_ids]
            else:
                reference = [r.get('vertex', r['id']) for r in data['A']]
        return WeightedCoreset(vertices, weights, data.get('params'), data.get('sizes'), ids, reference, reference_ids)

    def dump(self, path: str):
        with open(path, 'w') as json_file:
            json.dump(self.to_dict(), json_file, indent=1)

    def __repr__(self) -> str:
        return f'WeightedCoreset(size={len(self)}, total_weight={self.total_weight:.6g})'


def sensitivity_coreset(g: GraphInstance, X: Sequence[int], A: ApproxSolution, k: int, z: int, m: int,
                        seed: Optional[int] = None, weights: Optional[Sequence[float]] = None,
                        label: Union[str, int] = 'final') -> WeightedCoreset:
    """Importance samples ``m`` clients with probability proportional to their sensitivity bound.

    The bound of client ``p`` with weight ``w(p)`` is ``w(p) cost(p, A) / cost(X, A) + w(p) / (k W(C_p))``, where
    ``C_p`` is the cluster of ``p`` in ``A``. A sampled client gets weight ``count(p) w(p) / (m prob(p))`` and
    repeated draws merge into one member. A zero-cost ``A`` falls back to sampling proportional to ``w``.

    Raises
    ------
    InvalidParameterError
        If ``m < k``.
    DisconnectedError
        If ``A`` leaves a client unreachable.
    """
    if m < k:
        raise InvalidParameterError('m', m, f'The sample size must be at least k = {k}.')
    clients, w = collapse_clients(X, weights)
    d, owner = nearest_center(g, clients, A.centers)
    if np.any(np.isinf(d)):
        far = int(np.argmax(np.isinf(d)))
        raise DisconnectedError(int(clients[far]), int(A.centers[0]),
                                f'k = {k} is smaller than the number of client components.')
    share = w * d ** z
    total = float(share.sum())
    if total > 0:
        cluster_weight = {c: float(w[owner == c].sum()) for c in np.unique(owner).tolist()}
        sigma = share / total + w / (k * np.array([cluster_weight[c] for c in owner.tolist()]))
    else:
        sigma = w.copy()
    prob = sigma / sigma.sum()
    rng = derive_rng(seed, 'sample', label)
    draws = rng.choice(len(clients), size=m, replace=True, p=prob)
    counts = np.bincount(draws, minlength=len(clients))
    hit = np.nonzero(counts)[0]
    omega = counts[hit] * w[hit] / (m * prob[hit])
    params = {'k': k, 'z': z, 'm': m, 'seed': seed}
    return WeightedCoreset(clients[hit], omega, params, [len(clients), len(hit)], g.points.ids[clients[hit]],
                           A.centers, g.points.ids[A.centers])


def iterated_log(n: float, i: int) -> float:
    """``log^{(i)} n`` with natural logarithms, ``-inf`` once the argument is no longer positive."""
    value = float(n)
    for _ in range(i):
        if value <= 0:
            return -math.inf
        value = math.log(value)
    return value


def default_rho(z: int) -> int:
    return max(2, int(math.ceil(z * math.log2(z + 1))))


class ReductionSchedule:
    """Iterative size reduction schedule.

    ``t`` is the largest integer with ``log^{(t-1)} n >= max(125 k eps^-rho log(1/delta), rho 2^(rho+1))``. Pass ``i``
    runs at ``eps_i = eps / (log^{(i)} n)^(1/rho)`` and ``delta_i = delta / |X_{i-1}|``, so ``eps_i >= 2 eps_{i-1}`` and
    ``prod (1 + eps_i) <= 1 + 10 eps``.

    Attributes
    ----------
    n, k, z : int
        Instance size, centers and cost exponent.
    eps, delta, rho : float
        Final precision, failure probability and the schedule exponent.
    t : int
        Number of reduction passes before the final one.
    eps_i : List[float]
        Per-pass precisions.
    delta_i : List[float]
        Per-pass failure probabilities. Planned from the targets and overwritten with the realised input sizes.
    targets : List[int]
        Per-pass sample counts.
    threshold : float
        The bound ``log^{(t-1)} n`` is compared with.
    """

    __slots__ = ['n', 'k', 'z', 'eps', 'delta', 'rho', 't', 'eps_i', 'delta_i', 'targets', 'threshold']

    def __init__(self, n: int, k: int, z: int, eps: float, delta: float, rho: float, t: int, eps_i: List[float],
                 delta_i: List[float], targets: List[int], threshold: float):
        self.n = n
        self.k = k
        self.z = z
        self.eps = eps
        self.delta = delta
        self.rho = rho
        self.t = t
        self.eps_i = eps_i
        self.delta_i = delta_i
        self.targets = targets
        self.threshold = threshold

    @property
    def product(self) -> float:
        return math.prod(1.0 + e for e in self.eps_i)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'pass': range(1, self.t + 1), 'eps': self.eps_i, 'delta': self.delta_i,
                             'target': self.targets})

    def to_dict(self) -> Dict[str, Any]:
        return {s: getattr(self, s) for s in self.__slots__}

    def __repr__(self) -> str:
        return f'ReductionSchedule(t={self.t}, rho={self.rho}, product={self.product:.6g})'


def reduction_schedule(n: int, k: int, z: int, eps: float, delta: float, rho: Optional[float] = None,
                       preset: Union[str, ConstantsPreset] = 'desk') -> ReductionSchedule:
    """Builds the size reduction schedule for ``n`` clients.

    Raises
    ------
    InvalidParameterError
        If ``eps`` or ``delta`` are out of range.
    InvariantViolationError
        If the product of ``1 + eps_i`` exceeds ``1 + 10 eps``.
    """
    if not 0 < eps < 1:
        raise InvalidParameterError('eps', eps, 'Expected 0 < eps < 1.')
    if not 0 < delta < 0.25:
        raise InvalidParameterError('delta', delta, 'Expected 0 < delta < 1/4.')
    preset = get_preset(preset) if isinstance(preset, str) else preset
    rho = default_rho(z) if rho is None else float(rho)
    threshold = max(125.0 * k * eps ** -rho * math.log(1.0 / delta), rho * 2.0 ** (rho + 1))
    t = 0
    while iterated_log(n, t) >= threshold:
        t += 1
    eps_i = [eps / iterated_log(n, i) ** (1.0 / rho) for i in range(1, t + 1)]
    targets = [max(preset.coreset_size(k, e), int(math.ceil(iterated_log(n, i)))) for i, e in enumerate(eps_i, 1)]
    planned = [delta / n] + [delta / size for size in targets[:-1]]
    schedule = ReductionSchedule(n, k, z, eps, delta, rho, t, eps_i, planned[:t], targets, threshold)
    if schedule.product > 1.0 + 10.0 * eps:
        raise InvariantViolationError('schedule-product', f'prod(1 + eps_i) = {schedule.product} > {1 + 10 * eps}.')
    return schedule


def iterative_coreset(g: GraphInstance, X: Sequence[int], k: int, z: int, eps: float, delta: float,
                      seed: Optional[int] = None, preset: Union[str, ConstantsPreset] = 'desk',
                      rho: Optional[float] = None, m: Optional[int] = None,
                      logger: Optional[logging.Logger] = None) -> WeightedCoreset:
    """Builds an ``eps``-coreset by chaining sensitivity sampling through the reduction schedule::

        Y = iterative_coreset(g, X, k=3, z=2, eps=0.2, delta=0.1, seed=7)
        Y.sizes  # [|X|, |X_1|, ..., |Y|]

    Each pass draws ``max(m(eps_i), ceil(log^{(i)} n))`` samples, where ``m`` is the preset's size formula. A pass whose
    draw count reaches the current support size keeps its input. The final pass runs at ``eps`` with ``m`` samples.

    Parameters
    ----------
    g : GraphInstance
        The host graph.
    X : Sequence[int]
        Clients, repetitions allowed.
    k : int
        Number of centers.
    z : int
        Cost exponent.
    eps : float
        Final precision.
    delta : float
        Failure probability.
    seed : Optional[int]
        Root seed.
    preset : Union[str, ConstantsPreset]
        Constants preset. Defaults to ``'desk'``.
    rho : Optional[float]
        Schedule exponent. Defaults to ``max(2, ceil(z log2(z+1)))``.
    m : Optional[int]
        Final sample count. Defaults to the preset's size formula.
    logger : Optional[logging.Logger]
        Logger. Defaults to the package logger.

    Returns
    -------
    WeightedCoreset
        The coreset with every intermediate size in ``sizes``.
    """
    logger = get_logger(logger)
    preset = get_preset(preset) if isinstance(preset, str) else preset
    clients, w = collapse_clients(X)
    schedule = reduction_schedule(len(X), k, z, eps, delta, rho, preset)
    sizes = [len(clients)]
    for i, (eps_i, target) in enumerate(zip(schedule.eps_i, schedule.targets), 1):
        schedule.delta_i[i - 1] = delta / max(1, len(clients))
        if target >= len(clients):
            logger.info('Reduction pass %d keeps all %d clients (target %d).', i, len(clients), target)
            sizes.append(len(clients))
            continue
        A = approx_solution(g, clients, min(k, len(clients)), z, seed=None if seed is None else seed + i, weights=w)
        step = sensitivity_coreset(g, clients, A, k, z, target, seed, weights=w, label=i)
        clients, w = step.members, step.weights
        sizes.append(len(clients))
        logger.info('Reduction pass %d at eps %.4g kept %d clients.', i, eps_i, len(clients))
    m = preset.coreset_size(k, eps) if m is None else m
    A = approx_solution(g, clients, min(k, len(clients)), z, seed=seed, weights=w)
    result = sensitivity_coreset(g, clients, A, k, z, max(m, k), seed, weights=w, label='final')
    sizes.append(len(result))
    result.sizes = sizes
    result.params.update({'eps': eps, 'delta': delta, 'rho': schedule.rho, 't': schedule.t, 'n': len(X),
                          'preset': preset.name, 'seed': seed})
    logger.info('Coreset of %d clients has %d members (sizes %s).', len(X), len(result), sizes)
    return result


def _random_centers(g: GraphInstance, k: int, rng: np.random.Generator, near: Optional[Sequence[int]] = None
                    ) -> List[int]:
    if near is None:
        return sorted(rng.choice(g.n, size=k, replace=False).tolist())
    centers = set()
    for a in near:
        pool = ball(g, int(a), float(rng.uniform(0.0, 2.0)))
        centers.add(int(rng.choice(pool)))
    while len(centers) < k:
        centers.add(int(rng.integers(g.n)))
    return sorted(centers)[:k]


class CoresetReport:
    """Per-trial comparison of the true and coreset costs.

    Attributes
    ----------
    frame : pandas.DataFrame
        Columns ``trial, kind, true_cost, coreset_cost, rel_err``.
    """

    __slots__ = ['frame']

    def __init__(self, frame: pd.DataFrame):
        self.frame = frame

    @property
    def max_rel_err(self) -> float:
        return float(self.frame['rel_err'].max()) if len(self.frame) else 0.0

    @property
    def errors(self) -> List[float]:
        return self.frame['rel_err'].tolist()

    def quantile(self, q: float) -> float:
        return float(self.frame['rel_err'].quantile(q)) if len(self.frame) else 0.0

    def write(self, path: str):
        self.frame[['trial', 'true_cost', 'coreset_cost', 'rel_err']].to_csv(path, index=False, float_format='%.12g')

    def __repr__(self) -> str:
        return f'CoresetReport(trials={len(self.frame)}, max_rel_err={self.max_rel_err:.4g})'


def relative_error(true_cost: float, coreset_cost: float) -> float:
    if true_cost == 0:
        return 0.0 if coreset_cost == 0 else math.inf
    return abs(true_cost - coreset_cost) / true_cost


def verify_coreset(g: GraphInstance, X: Sequence[int], Y: WeightedCoreset, z: Optional[int] = None,
                   trials: int = 100, seed: Optional[int] = None, k: Optional[int] = None,
                   A: Optional[Sequence[int]] = None) -> CoresetReport:
    """Compares ``cost(X, S)`` with ``sum omega(y) cost(y, S)`` on random ``k``-subsets ``S``.

    Even trials draw ``S`` uniformly from ``V``. Odd trials perturb ``A`` (when given) by moving each center to a
    random vertex within graph distance ``U(0, 2)``. Trial ``i`` uses the stream ``(seed, 'verify', i)``.

    Raises
    ------
    InvalidParameterError
        If ``trials < 1``.
    """
    if trials < 1:
        raise InvalidParameterError('trials', trials, 'At least one trial is required.')
    z = Y.params.get('z', 1) if z is None else z
    k = Y.params.get('k', 1) if k is None else k
    k = min(k, g.n)
    X = np.asarray(X, dtype=np.int64)
    rows = []
    for trial in range(trials):
        rng = derive_rng(seed, 'verify', trial)
        near = A if (A is not None and trial % 2 == 1) else None
        S = _random_centers(g, k, rng, near)
        true_cost = cost(g, X, S, z)
        coreset_cost = Y.cost(g, S, z)
        rows.append({'trial': trial, 'kind': 'uniform' if near is None else 'near-A', 'true_cost': true_cost,
                     'coreset_cost': coreset_cost, 'rel_err': relative_error(true_cost, coreset_cost)})
    return CoresetReport(pd.DataFrame(rows, columns=['trial', 'kind', 'true_cost', 'coreset_cost', 'rel_err']))
