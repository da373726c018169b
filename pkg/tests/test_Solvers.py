import itertools as itt

import numpy as np
import pytest

import IGCoreset.Solvers as solvers
from IGCoreset.Core import BudgetExceededError, InvalidParameterError
from IGCoreset.Coresets import WeightedCoreset
from IGCoreset.Geometry import PointSet
from IGCoreset.Graphs import build_graph


def instance(n: int = 10, box: float = 3.0, metric: str = 'udg-l2', seed: int = 0):
    pts = PointSet.from_coords(np.random.default_rng(seed).uniform(0, box, size=(n, 2)))
    g = build_graph(pts, metric)
    _, labels = g.components()
    keep = np.nonzero(labels == np.bincount(labels).argmax())[0]
    return g.induced(keep) if len(keep) < g.n else g


class TestCounting:

    def test_stirling2(self):
        assert solvers.stirling2(0, 0) == 1
        assert solvers.stirling2(3, 0) == 0
        assert solvers.stirling2(4, 2) == 7
        assert solvers.stirling2(5, 3) == 25
        assert solvers.stirling2(2, 3) == 0

    def test_count_partitions(self):
        assert solvers.count_partitions(0, 3) == 1
        assert solvers.count_partitions(4, 2) == 8
        # Bell number.
        assert solvers.count_partitions(4, 4) == 15
        assert solvers.count_partitions(5, 1) == 1


class TestRestrictedGrowthStrings:

    def test_small(self):
        assert list(solvers.restricted_growth_strings(3, 2)) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1)]
        assert list(solvers.restricted_growth_strings(1, 3)) == [(0,)]
        assert list(solvers.restricted_growth_strings(0, 3)) == [()]

    @pytest.mark.parametrize('n,k', [(4, 2), (5, 3), (6, 6), (7, 2)])
    def test_count(self, n, k):
        strings = list(solvers.restricted_growth_strings(n, k))
        assert len(strings) == len(set(strings)) == solvers.count_partitions(n, k)
        for a in strings:
            assert a[0] == 0
            assert max(a) < k
            for i in range(1, n):
                assert a[i] <= 1 + max(a[:i])

    def test_prefix(self):
        strings = list(solvers.restricted_growth_strings(4, 2, (0, 1)))
        assert len(strings) == 4
        assert all(a[:2] == (0, 1) for a in strings)


class TestEnumeratePartitions:

    def test_matches_center_scan(self):
        columns = np.random.default_rng(3).uniform(0, 5, size=(5, 6))
        centers, value, visited = solvers.enumerate_partitions(columns, 2)
        best = min(columns[list(c)].min(axis=0).sum()
                   for size in (1, 2) for c in itt.combinations(range(5), size))
        assert value == pytest.approx(best)
        assert columns[centers].min(axis=0).sum() == pytest.approx(best)
        assert visited == solvers.count_partitions(6, 2)

    def test_processes(self):
        columns = np.random.default_rng(4).uniform(0, 5, size=(6, 7))
        assert solvers.enumerate_partitions(columns, 3, processes=2)[:2] == \
            solvers.enumerate_partitions(columns, 3)[:2]


class TestFptCluster:

    def test_exact_coreset(self):
        g = instance()
        X = np.arange(g.n)
        Y = WeightedCoreset(X, np.ones(g.n), {'k': 2, 'z': 1})
        result = solvers.fpt_cluster(g, X, 2, coreset=Y)
        opt = solvers.brute_force(g, X, 2)
        assert result.cost == pytest.approx(opt.cost)
        assert result.check(g, X, 1)
        assert result.extra['coreset_size'] == g.n

    def test_sampled_coreset(self):
        g = instance(seed=1)
        X = np.arange(g.n)
        result = solvers.fpt_cluster(g, X, 2, z=2, eps=0.5, seed=7)
        opt = solvers.brute_force(g, X, 2, z=2)
        assert len(result.centers) == 2
        assert result.cost >= opt.cost - 1e-9
        assert result.check(g, X, 2)

    @pytest.mark.slow
    def test_against_brute_force(self):
        eps = 0.3
        close = 0
        for seed in range(20):
            g = instance(n=12, box=3.5, seed=seed)
            X = np.arange(g.n)
            opt = solvers.brute_force(g, X, 2).cost
            result = solvers.fpt_cluster(g, X, 2, z=1, eps=eps, seed=seed)
            assert opt - 1e-9 <= result.cost <= (1 + 3 * eps) * opt + 1e-9
            close += result.cost <= (1 + eps) * opt + 1e-9
        assert close >= 17

    def test_one_center(self):
        g = instance(seed=2)
        X = np.arange(g.n)
        result = solvers.fpt_cluster(g, X, 1)
        assert result.cost == pytest.approx(solvers.brute_force(g, X, 1).cost)
        assert result.extra['partitions'] == 0

    def test_guard(self):
        g = build_graph(PointSet.from_coords([(1.5 * i, 0) for i in range(30)]), 'udg-l2')
        Y = WeightedCoreset(np.arange(30), np.ones(30))
        with pytest.raises(BudgetExceededError):
            solvers.fpt_cluster(g, np.arange(30), 2, coreset=Y)

    def test_invalid(self):
        g = instance()
        with pytest.raises(InvalidParameterError):
            solvers.fpt_cluster(g, [0, 1], 3)


class TestBruteForce:

    def test_line(self):
        g = build_graph(PointSet.from_coords([(i, 0) for i in range(6)]), 'udg-l2')
        result = solvers.brute_force(g, [0, 1, 4, 5], 2)
        assert result.centers == [0, 4]
        assert result.cost == pytest.approx(2.0)
        assert result.extra['subsets'] == 15

    def test_budget(self):
        g = instance()
        with pytest.raises(BudgetExceededError):
            solvers.brute_force(g, np.arange(g.n), 2, budget=3)
        with pytest.raises(InvalidParameterError):
            solvers.brute_force(g, [0], 0)


class TestClusteringResult:

    def test_to_dict(self, tmp_path):
        result = solvers.ClusteringResult([3, 1], 2.5, 'fpt', 0.25, {'coreset_size': 4})
        assert result.centers == [1, 3]
        assert result.to_dict() == {'centers': [1, 3], 'cost': 2.5, 'method': 'fpt', 'coreset_size': 4,
                                    'wall_time': 0.25}
        assert 'wall_time' not in result.to_dict(timings=False)
        result.dump(str(tmp_path / 'result.json'), timings=False)
        assert (tmp_path / 'result.json').exists()
