import itertools as itt
import logging
import math
import time
import traceback

import numpy as np
import pandas as pd

from multiprocessing import Pool
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from IGCoreset.Collectors import MatrixCollector
from IGCoreset.Core import PRESETS, ConfigError, InvalidParameterError, derive_rng, get_logger
from IGCoreset.Coresets import approx_solution, iterative_coreset, verify_coreset
from IGCoreset.Decomposition import build_tree, check_tree
from IGCoreset.Geometry import PointSet
from IGCoreset.Graphs import GraphInstance, MetricKind, build_graph
from IGCoreset.Spanners import count_crossings, family_spanner, verify_stretch

GENERATORS = ('uniform-box', 'gaussian-clusters', 'grid-jitter')


class ParameterList:
    """Expands list-valued experiment fields into the cartesian product of single-valued parameter sets.

    For example::

        import IGCoreset.Batching as batching

        p_list = batching.ParameterList()
        p_list.add_parameter('metric', 'udg-l2')
        p_list.add_parameter('n', [60, 120])

        p_list.build()
        # [{'metric': 'udg-l2', 'n': 60}, {'metric': 'udg-l2', 'n': 120}]
    """

    def __init__(self, parameters: Optional[Dict[str, Union[Any, Iterable[Any]]]] = None):
        """Creates a ParameterList object.

        Parameters
        ----------
        parameters : Optional[Dict[str, Union[Any, Iterable[Any]]]]
            Initial parameters. Defaults to ``None`` which results in an empty ParameterList object.

        Raises
        ------
        AttributeError
            If any of the keys in ``parameters`` are not of type ``str``.
        """
        self._parameters = {}
        if parameters is not None:
            for key in parameters:
                if type(key) != str:
                    raise AttributeError(f"All parameter keys must of type str found {type(key)} instead.")
                self._parameters[key] = parameters[key]

    def add_parameter(self, name: str, values: Union[Any, Iterable[Any]]):
        """Adds a parameter with a single value (``60``) or several (``[60, 120]``).

        Raises
        ------
        AttributeError
            If ``name`` is not of type ``str``.
        KeyError
            If a parameter called ``name`` already exists.
        """
        if type(name) != str:
            raise AttributeError(f"All parameter keys must of type str found {type(name)} instead.")
        if name in self._parameters:
            raise KeyError(f"Parameter with name {name} already exists within the ParameterList.")
        self._parameters[name] = values

    def remove_parameter(self, name: str):
        """Removes a parameter.

        Raises
        ------
        KeyError
            If ``name`` is not a valid parameter name.
        """
        if name not in self._parameters:
            raise KeyError(f"Parameter with name {name} does not exist in the ParameterList.")
        del self._parameters[name]

    def build(self) -> List[Dict[str, Any]]:
        """Returns one dictionary per combination of values, the first parameter varying slowest."""
        param_list = []
        for key, value in self._parameters.items():
            if isinstance(value, (str, dict)):
                args = [(key, value)]
            else:
                try:
                    args = [(key, v) for v in value]
                except TypeError:
                    args = [(key, value)]
            param_list.append(args)
        return [dict(kwargs) for kwargs in itt.product(*param_list)]


def _as_bool(value: Any) -> bool:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(f'"{value}" is not a boolean.')
    return bool(value)


def _as_optional_int(value: Any) -> Optional[int]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ('', 'none', 'all')):
        return None
    return int(value)


class ExperimentConfig:
    """One experiment: an instance generator, a metric and the clustering parameters.

    A config describes a matrix when a field in ``EXPANDABLE`` holds a list. ``expand()`` turns it into single-valued
    configs. Every cell of the matrix is a ``(config, seed)`` pair that produces ``trials`` report rows.

    Attributes
    ----------
    name : str
        Experiment name used in reports.
    generator : str
        ``uniform-box``, ``gaussian-clusters`` or ``grid-jitter``.
    n : int
        Number of points.
    metric : str
        Metric label such as ``udg-l2``, ``usg-linf`` or ``hop-udg``.
    k, z : int
        Number of centers and cost exponent.
    eps, delta : float
        Coreset precision and failure probability.
    seeds : List[int]
        Seeds, one matrix cell each.
    trials : int
        Coreset verification trials per cell.
    preset : str
        Constants preset name.
    box : float
        Side of the square the generators draw from.
    clusters : int
        Planted centers of ``gaussian-clusters``.
    spread : float
        Standard deviation of ``gaussian-clusters``.
    jitter : float
        Half-width of the ``grid-jitter`` displacement.
    clients : Optional[int]
        Size of the client set drawn from ``V``. ``None`` uses every vertex.
    decompose : bool
        Whether cells build and check the recursive decomposition.
    timings : bool
        Whether reports carry runtime columns.
    """

    FIELDS = {
        'name': (str, 'experiment'),
        'generator': (str, 'uniform-box'),
        'n': (int, 100),
        'metric': (str, 'udg-l2'),
        'k': (int, 3),
        'z': (int, 1),
        'eps': (float, 0.2),
        'delta': (float, 0.1),
        'seeds': (int, [0]),
        'trials': (int, 10),
        'preset': (str, 'desk'),
        'box': (float, 6.0),
        'clusters': (int, 3),
        'spread': (float, 0.5),
        'jitter': (float, 0.25),
        'clients': (_as_optional_int, None),
        'decompose': (_as_bool, True),
        'timings': (_as_bool, False),
    }
    EXPANDABLE = ('generator', 'n', 'metric', 'k', 'z', 'eps', 'delta')

    __slots__ = list(FIELDS)

    def __init__(self, **kwargs):
        for field, (_, default) in ExperimentConfig.FIELDS.items():
            setattr(self, field, list(default) if isinstance(default, list) else default)
        for field, value in kwargs.items():
            if field not in ExperimentConfig.FIELDS:
                raise ConfigError(field, 'unknown field.')
            setattr(self, field, value)

    @staticmethod
    def from_dict(data: Dict[str, Any], path: str = '') -> 'ExperimentConfig':
        """Builds a config from plain values, coercing strings to the field types.

        Raises
        ------
        ConfigError
            If a field is unknown or cannot be coerced.
        """
        prefix = f'{path}.' if path else ''
        values = {}
        for field, value in data.items():
            if field not in ExperimentConfig.FIELDS:
                raise ConfigError(prefix + field, 'unknown field.')
            cast = ExperimentConfig.FIELDS[field][0]
            try:
                if field == 'seeds' or (field in ExperimentConfig.EXPANDABLE and isinstance(value, (list, tuple))):
                    items = value if isinstance(value, (list, tuple)) else [value]
                    values[field] = [cast(v) for v in items]
                else:
                    values[field] = cast(value)
            except (TypeError, ValueError) as error:
                raise ConfigError(prefix + field, f'cannot read {value!r}: {error}')
        return ExperimentConfig(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {field: getattr(self, field) for field in ExperimentConfig.FIELDS}

    def expand(self) -> List['ExperimentConfig']:
        """Splits list-valued fields into single-valued configs."""
        p_list = ParameterList(self.to_dict())
        for field in ExperimentConfig.FIELDS:
            if field not in ExperimentConfig.EXPANDABLE:
                p_list.remove_parameter(field)
                p_list.add_parameter(field, [getattr(self, field)])
        return [ExperimentConfig(**params) for params in p_list.build()]

    def validate(self) -> 'ExperimentConfig':
        """Checks every field against its documented range.

        Raises
        ------
        ConfigError
            With the dotted field path of the first invalid field.
        """
        def fail(field: str, reason: str):
            raise ConfigError(f'{self.name}.{field}', reason)

        for field in ExperimentConfig.EXPANDABLE:
            if isinstance(getattr(self, field), list):
                fail(field, 'expand() the config before validating it.')
        if self.generator not in GENERATORS:
            fail('generator', f'expected one of {list(GENERATORS)}.')
        if self.n < 1:
            fail('n', 'at least one point is required.')
        try:
            MetricKind.parse(self.metric)
        except (InvalidParameterError, KeyError, ValueError) as error:
            fail('metric', str(error))
        if self.k < 1:
            fail('k', 'at least one center is required.')
        if self.z < 1:
            fail('z', 'the cost exponent must be at least 1.')
        if not 0 < self.eps < 1:
            fail('eps', 'expected 0 < eps < 1.')
        if not 0 < self.delta < 0.25:
            fail('delta', 'expected 0 < delta < 1/4.')
        if not self.seeds:
            fail('seeds', 'at least one seed is required.')
        if self.trials < 1:
            fail('trials', 'at least one trial is required.')
        if self.preset not in PRESETS:
            fail('preset', f'expected one of {sorted(PRESETS)}.')
        if self.box <= 0:
            fail('box', 'the box side must be positive.')
        if self.clusters < 1:
            fail('clusters', 'at least one cluster is required.')
        if self.spread < 0 or self.jitter < 0:
            fail('spread' if self.spread < 0 else 'jitter', 'must be non-negative.')
        if self.clients is not None and not 1 <= self.clients <= self.n:
            fail('clients', f'expected 1 <= clients <= n = {self.n}.')
        if self.k > (self.n if self.clients is None else self.clients):
            fail('k', 'k exceeds the number of clients.')
        return self

    def __eq__(self, other) -> bool:
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f'ExperimentConfig({self.to_dict()})'


def generate(config: ExperimentConfig, seed: Optional[int] = None) -> PointSet:
    """Draws the point set of ``config`` from the stream ``(seed, 'generate', generator)``.

    ``uniform-box`` draws from ``[0, box]^2``. ``gaussian-clusters`` plants ``clusters`` centers in the box and adds
    normal noise of deviation ``spread``. The planted centers are stored in ``meta['planted']``. ``grid-jitter`` fills
    a square grid row by row and moves every point uniformly by up to ``jitter`` per axis. A single point is always
    ``(0, 0)`` with id ``0``.

    Raises
    ------
    ConfigError
        If the config is invalid.
    """
    config.validate()
    seed = config.seeds[0] if seed is None else seed
    meta = {'generator': config.generator, 'seed': seed}
    if config.n == 1:
        return PointSet.from_coords([(0.0, 0.0)], [0], meta)
    rng = derive_rng(seed, 'generate', config.generator)
    if config.generator == 'uniform-box':
        coords = rng.uniform(0.0, config.box, size=(config.n, 2))
    elif config.generator == 'gaussian-clusters':
        planted = rng.uniform(0.0, config.box, size=(config.clusters, 2))
        labels = rng.integers(config.clusters, size=config.n)
        coords = planted[labels] + rng.normal(0.0, config.spread, size=(config.n, 2))
        meta['planted'] = planted.tolist()
        meta['labels'] = labels.tolist()
    else:
        side = int(math.ceil(math.sqrt(config.n)))
        spacing = config.box / side
        idx = np.arange(config.n)
        base = np.column_stack([(idx % side + 0.5) * spacing, (idx // side + 0.5) * spacing])
        coords = base + rng.uniform(-config.jitter, config.jitter, size=(config.n, 2))
    return PointSet.from_coords(coords, meta=meta)


def planted_vertices(points: PointSet) -> List[int]:
    """Nearest vertex (Euclidean) to every planted center of a ``gaussian-clusters`` point set."""
    planted = np.asarray(points.meta.get('planted', []), dtype=float).reshape(-1, 2)
    d = np.hypot(points.coords[None, :, 0] - planted[:, None, 0], points.coords[None, :, 1] - planted[:, None, 1])
    return sorted({int(i) for i in np.argmin(d, axis=1)}) if len(planted) else []


def draw_clients(config: ExperimentConfig, g: GraphInstance, seed: int) -> np.ndarray:
    if config.clients is None or config.clients >= g.n:
        return np.arange(g.n)
    return np.sort(derive_rng(seed, 'clients').choice(g.n, size=config.clients, replace=False))


def depth_limit(marked: int) -> float:
    """Accepted decomposition depth ``4 log2 |X| + 2``."""
    return 4.0 * math.log2(max(marked, 1)) + 2.0


def run_cell(config: ExperimentConfig, seed: int) -> List[Dict[str, Any]]:
    """Runs one ``(config, seed)`` cell and returns one row per verification trial.

    The cell builds the instance and its family spanner, checks stretch and crossings, optionally builds and checks
    the decomposition over the clients, then builds a coreset and verifies it. ``hard_ok`` is ``False`` when the
    stretch exceeds the declared bound, the spanner has a crossing, or the decomposition fails its checks.
    """
    clock = {}

    def timed(label: str, func, *args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        clock[f't_{label}'] = time.perf_counter() - start
        return result

    points = timed('generate', generate, config, seed)
    g = timed('graph', build_graph, points, config.metric)
    X = draw_clients(config, g, seed)
    spanner = timed('spanner', family_spanner, g)
    stretch = verify_stretch(g, spanner, seed=seed)
    crossings = count_crossings(spanner)
    hard_ok = crossings == 0 and stretch <= spanner.alpha + 1e-9
    depth, depth_ok = None, None
    if config.decompose:
        tree = timed('decompose', build_tree, g, X)
        depth = tree.depth
        depth_ok = bool(check_tree(tree)) and depth <= depth_limit(len(X))
        hard_ok = hard_ok and depth_ok
    Y = timed('coreset', iterative_coreset, g, X, config.k, config.z, config.eps, config.delta, seed, config.preset)
    A = approx_solution(g, X, config.k, config.z, seed)
    report = timed('verify', verify_coreset, g, X, Y, config.z, config.trials, seed, config.k, A.centers)
    base = {
        'experiment': config.name,
        'generator': config.generator,
        'n': config.n,
        'metric': MetricKind.parse(config.metric).label,
        'k': config.k,
        'z': config.z,
        'eps': config.eps,
        'seed': seed,
        'edges': g.m,
        'coreset_size': len(Y),
        'stretch': stretch,
        'declared_stretch': spanner.alpha,
        'crossings': crossings,
        'depth': depth,
        'depth_ok': depth_ok,
        'hard_ok': bool(hard_ok),
    }
    rows = []
    for row in report.frame.itertuples(index=False):
        record = dict(base)
        record.update({'trial': int(row.trial), 'true_cost': float(row.true_cost),
                       'coreset_cost': float(row.coreset_cost), 'rel_err': float(row.rel_err)})
        if config.timings:
            record.update(clock)
        rows.append(record)
    return rows


def _run_cell_isolated(cell: Tuple[ExperimentConfig, int]) -> Tuple[List[Dict[str, Any]], Optional[Dict[str, Any]]]:
    config, seed = cell
    try:
        return run_cell(config, seed), None
    except Exception as error:
        return [], {'experiment': config.name, 'seed': seed, 'error': f'{type(error).__name__}: {error}',
                    'trace': traceback.format_exc(limit=3)}


class MatrixReport:
    """Rows and isolated failures of a ``run_matrix`` call.

    Attributes
    ----------
    rows : pandas.DataFrame
        One row per ``(config, seed, trial)``.
    failures : pandas.DataFrame
        One row per failed cell.
    """

    __slots__ = ['rows', 'failures']

    def __init__(self, rows: pd.DataFrame, failures: pd.DataFrame):
        self.rows = rows
        self.failures = failures

    @property
    def ok(self) -> bool:
        hard = self.rows['hard_ok'].all() if 'hard_ok' in self.rows else True
        return bool(hard) and len(self.failures) == 0

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def __repr__(self) -> str:
        return f'MatrixReport(rows={len(self.rows)}, failures={len(self.failures)}, ok={self.ok})'


def run_matrix(configs: Sequence[ExperimentConfig], processes: int = 1,
               collector: Optional[MatrixCollector] = None, logger: Optional[logging.Logger] = None
               ) -> MatrixReport:
    """Runs every ``(config, seed)`` cell of ``configs`` and aggregates the rows in cell order::

        collector = MatrixCollector('bench.csv')
        report = run_matrix(KeyValueDecoder().decode('bench.cfg'), processes=4, collector=collector)
        collector.write_records()
        sys.exit(report.exit_code)

    A failing cell is logged as a warning and reported in ``failures`` without stopping the others.

    Parameters
    ----------
    configs : Sequence[ExperimentConfig]
        The experiments. List-valued fields are expanded.
    processes : int
        Worker processes. Defaults to ``1``.
    collector : Optional[MatrixCollector]
        Receives the rows and failures. Defaults to a fresh stdout collector.
    logger : Optional[logging.Logger]
        Logger. Defaults to the package logger.

    Returns
    -------
    MatrixReport
        The aggregated report.
    """
    logger = get_logger(logger)
    cells = []
    for config in configs:
        for single in config.expand():
            single.validate()
            cells.extend((single, int(seed)) for seed in single.seeds)
    collector = MatrixCollector() if collector is None else collector
    if processes == 1:
        results = map(_run_cell_isolated, cells)
    else:
        pool = Pool(processes)
        results = pool.imap(_run_cell_isolated, cells)
    try:
        for (config, seed), (rows, failure) in zip(cells, results):
            if failure is not None:
                logger.warning('Cell %s seed %d failed: %s', config.name, seed, failure['error'])
                collector.fail(failure)
                continue
            collector.collect(rows)
            logger.info('Cell %s (%s, n=%d, k=%d) seed %d done, %d rows.', config.name, config.metric, config.n,
                        config.k, seed, len(rows))
    finally:
        if processes != 1:
            pool.close()
            pool.join()
    return MatrixReport(collector.to_frame(), collector.failure_frame())
