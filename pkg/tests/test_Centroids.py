import math

import numpy as np
import pytest

from hypothesis import given, strategies as st

import IGCoreset.Centroids as centroids
from IGCoreset.Core import InvalidParameterError, PreconditionError, get_preset
from IGCoreset.Coresets import approx_solution
from IGCoreset.Geometry import PointSet
from IGCoreset.Graphs import PropertyReport, build_graph


def instance(n: int = 40, box: float = 4.0, metric: str = 'udg-l2', seed: int = 0):
    pts = PointSet.from_coords(np.random.default_rng(seed).uniform(0, box, size=(n, 2)))
    g = build_graph(pts, metric)
    _, labels = g.components()
    keep = np.nonzero(labels == np.bincount(labels).argmax())[0]
    return g.induced(keep) if len(keep) < g.n else g


def sparse_grid(side: int = 7):
    """A grid with spacing 1.5, so the unit-disk graph is the 4-neighbour grid. Clients sit at the corners and the
    centre."""
    g = build_graph(PointSet.from_coords([(1.5 * i, 1.5 * j) for i in range(side) for j in range(side)]), 'udg-l2')
    last = side * side - 1
    X = np.array([0, side - 1, last // 2, last - side + 1, last])
    return g, X


class TestSupportGraph:

    def test_build(self):
        g = instance()
        sg = centroids.SupportGraph.build(g, 0.25)
        assert sg.check()
        assert sg.max_degree <= sg.degree_bound
        assert set(sg.special.tolist()) == set(sg.f.tolist())
        # The special point of a cell is its smallest vertex.
        for v in range(g.n):
            assert sg.f[v] <= v
            assert sg.f[sg.f[v]] == sg.f[v]

    def test_mu_range(self):
        g = instance(n=10)
        with pytest.raises(InvalidParameterError):
            centroids.SupportGraph.build(g, 2.0)
        with pytest.raises(InvalidParameterError):
            centroids.SupportGraph.build(g, 0.0)

    def test_identity(self):
        g = instance(n=20, metric='hop-udg')
        sg = centroids.SupportGraph.identity(g)
        assert sg.f.tolist() == list(range(g.n))
        assert sg.degree_bound == g.max_degree
        assert sg.check()

    def test_hops_and_walks(self):
        pts = PointSet.from_coords([(0, 0), (0.1, 0), (1.5, 0), (3.0, 0)])
        g = build_graph(pts, 'udg-l2')
        sg = centroids.SupportGraph.build(g, 0.5)
        assert sg.f.tolist() == [0, 0, 2, 3]
        hops = sg.hops_from([0])
        # Only special points carry support edges.
        assert hops[[0, 2, 3]].tolist() == [0, 1, 2]
        assert math.isinf(hops[1])
        assert math.isinf(sg.hops_from([])[0])
        assert sg.walk_image([1, 0, 2, 3]) == [0, 2, 3]


class TestNetAndSupport:

    def test_c_net(self):
        g = instance()
        X = np.arange(g.n)
        members, nets = centroids.build_c_net(g, X, [0], 0.5, 1)
        dA = g.oracle.row(0)
        assert set(nets) == {int(p) for p in X if dA[p] < 1}
        assert nets[0].members == [0]
        assert set(members.tolist()) == {m for net in nets.values() for m in net.members}
        for p, net in nets.items():
            for v, rep in net.cover.items():
                assert g.oracle(v, rep) <= net.covering_radius + 1e-9

        with pytest.raises(InvalidParameterError):
            centroids.build_c_net(g, X, [], 0.5, 1)

    def test_c_net_hop(self):
        g = instance(metric='hop-udg')
        members, nets = centroids.build_c_net(g, np.arange(g.n), [0], 0.5, 1)
        assert len(members) == 0 and nets == {}

    def test_c_support(self):
        g = instance()
        members, sg = centroids.build_c_support(g, [0], 0.5, 1, 0)
        assert members.tolist() == [int(sg.f[0])]
        wide, _ = centroids.build_c_support(g, [0], 0.5, 1, g.n, sg)
        assert set(wide.tolist()) == set(sg.special.tolist())


class TestRoundClamped:

    def test_rounding(self):
        assert centroids.round_clamped(1.0, 0.5, 10.0) == 2
        # Ties go toward minus infinity.
        assert centroids.round_clamped(0.75, 0.5, 10.0) == 1
        assert centroids.round_clamped(100.0, 1.0, 5.0) == 5
        assert centroids.round_clamped(math.inf, 1.0, 5.0) == 5
        assert centroids.round_clamped(0.0, 0.0, 1.0) == 0
        assert centroids.round_clamped(1.0, 0.0, 1.0) == -1
        assert centroids.round_clamped(3.0, math.inf, math.inf) == 0

    @given(st.floats(0.0, 1e6), st.floats(1e-3, 1e3))
    def test_nearest_multiple(self, value, unit):
        m = centroids.round_clamped(value, unit, math.inf)
        assert abs(m * unit - value) <= unit / 2 + 1e-9 * (value + unit)

    @given(st.floats(0.0, 1e6), st.floats(1e-3, 1e3), st.floats(0.0, 1e4))
    def test_clamp(self, value, unit, cap):
        assert centroids.round_clamped(value, unit, cap) <= math.ceil(cap / unit)


class TestCentroidSet:

    def test_build(self):
        g = instance()
        X = np.arange(g.n)
        cs = centroids.build_centroid_set(g, X, [0, g.n - 1], 0.5)
        preset = get_preset('desk')
        assert cs.ell == preset.hop_radius(0.5, 1, cs.alpha, g.metric.c1p, g.metric.c2p)
        assert set(cs.net.tolist()) <= set(cs.members.tolist())
        assert set(cs.support.tolist()) <= set(cs.members.tolist())
        # Every vertex is within ell hops of a client, so nothing needs a landmark.
        assert not cs.r_prime.any()
        assert len(cs.landmark) == 0
        sizes = cs.sizes()
        assert sizes['total'] == len(cs)
        assert sizes['log_size_shape'] > 0

    def test_invalid(self):
        g = instance(n=10)
        with pytest.raises(InvalidParameterError):
            centroids.build_centroid_set(g, [0], [0], 1.5)
        with pytest.raises(InvalidParameterError):
            centroids.build_centroid_set(g, [0], [0], 0.5, z=0)
        with pytest.raises(InvalidParameterError):
            centroids.build_centroid_set(g, [], [0], 0.5)
        with pytest.raises(InvalidParameterError):
            centroids.build_centroid_set(g, [0], [], 0.5)

    def test_long_path_mask(self):
        pts = PointSet.from_coords([(1.5 * i, 0) for i in range(6)])
        g = build_graph(pts, 'udg-l2')
        assert centroids.long_path_mask(g, [0], 2).tolist() == [False, False, False, True, True, True]

    def test_landmarks(self):
        g, X = sparse_grid()
        cs = centroids.build_centroid_set(g, X, [X[0], X[-1]], 0.5, ell=1)
        assert cs.r_prime.any()
        assert len(cs.landmark) > 0
        assert set(cs.landmark.tolist()) <= set(np.nonzero(cs.r_prime)[0].tolist())
        assert len(cs.landmark) == len(set(cs.groups.values()))
        assert centroids.check_landmarks(cs)
        assert centroids.check_landmark_groups(cs)
        for lms in cs.landmark_sets():
            assert len(lms) <= lms.size_bound(cs.alpha)

    def test_canonical_tuple(self):
        g, X = sparse_grid()
        cs = centroids.build_centroid_set(g, X, [X[0], X[-1]], 0.5, ell=1)
        s = int(np.nonzero(cs.r_prime)[0][0])
        blocks = centroids.canonical_tuple(s, cs)
        assert blocks[-1].kind == centroids.TupleKind.LEAF
        assert blocks == centroids.canonical_tuple(s, cs)

        with pytest.raises(PreconditionError):
            centroids.canonical_tuple(int(X[0]), cs)

    def test_hop(self):
        g = instance(metric='hop-udg')
        cs = centroids.build_centroid_set(g, np.arange(g.n), [0], 0.5)
        assert len(cs.net) == 0
        assert cs.support_graph.mu == 0.0
        assert cs.alpha >= 1.0


class TestReplacement:

    def test_replace(self):
        g = instance()
        X = np.arange(g.n)
        cs = centroids.build_centroid_set(g, X, [0, g.n // 2], 0.5)
        S = [3, 11, g.n - 2]
        rep = centroids.replace_solution(S, cs)
        members = set(cs.members.tolist())
        assert sorted(rep.rho) == sorted(S)
        assert set(rep.centers) <= members
        frame = rep.to_frame()
        assert frame['s'].tolist() == sorted(S)
        assert set(frame['rule']) <= {r.name for r in centroids.Rule}

        with pytest.raises(InvalidParameterError):
            centroids.replace_solution([], cs)

    def test_landmark_rule(self):
        g, X = sparse_grid()
        cs = centroids.build_centroid_set(g, X, [X[0], X[-1]], 0.5, ell=1)
        far = [s for s in np.nonzero(cs.r_prime)[0].tolist()
               if not np.isin(cs.support_graph.f[s], cs.support)]
        assert far
        rep = centroids.replace_solution(far[:2], cs)
        for s in far[:2]:
            assert rep.rules[s] == centroids.Rule.LANDMARK
            assert rep.rho[s] in set(cs.landmark.tolist())

    def test_errors(self):
        g = instance()
        X = np.arange(g.n)
        cs = centroids.build_centroid_set(g, X, [0, g.n // 2], 0.5)
        rep = centroids.replace_solution([5, 17], cs)
        frame = centroids.error_frame(cs, rep)
        assert list(frame.columns) == ['p', 'cost_S', 'cost_St', 'cost_A', 'relevant', 'bound', 'error', 'ok']
        assert len(frame) == len(X)
        report = centroids.centroid_errors(cs, rep)
        assert report.checked == int(frame['relevant'].sum())
        assert centroids.pass_rate(report) >= 0.75

        claims = centroids.replacement_claims(cs, rep)
        assert claims.checked > 0
        kinds = {'net', 'net_sub', 'support', 'landmark-forward', 'landmark-backward', 'backward-1', 'backward-2'}
        assert {v[0] for v in claims.violations} <= kinds

    @pytest.mark.slow
    def test_error_pass_rate(self):
        g = instance(n=60, box=5.0, seed=1)
        X = np.arange(g.n)
        A = approx_solution(g, X, 3, 1, seed=0)
        cs = centroids.build_centroid_set(g, X, A.centers, 0.3, 1, 'desk')
        rng = np.random.default_rng(0)
        checked = failed = 0
        for _ in range(50):
            S = np.sort(rng.choice(g.n, size=3, replace=False))
            report = centroids.centroid_errors(cs, centroids.replace_solution(S, cs))
            checked += report.checked
            failed += len(report.violations)
        assert checked > 0
        assert failed <= 0.05 * checked

    def test_pass_rate(self):
        report = PropertyReport('x')
        assert centroids.pass_rate(report) == 1.0
        report.checked = 4
        report.violations.append(('error',))
        assert centroids.pass_rate(report) == 0.75
