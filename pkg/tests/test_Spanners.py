import math

import numpy as np
import pytest

import IGCoreset.Spanners as spanners
from IGCoreset.Core import InvalidParameterError
from IGCoreset.Geometry import PointSet
from IGCoreset.Graphs import build_graph


def random_points(n: int, box: float, seed: int) -> PointSet:
    return PointSet.from_coords(np.random.default_rng(seed).uniform(0, box, size=(n, 2)))


class TestTriangulation:

    def test_small(self):
        pts = PointSet.from_coords([(0, 0), (1, 0)])
        tri = spanners.l2_delaunay(pts)
        assert tri.edge_set() == {(0, 1)}
        assert len(tri.triangles) == 0

    def test_square(self):
        pts = PointSet.from_coords([(0, 0), (1, 0), (0, 1), (1, 1)])
        tri = spanners.l2_delaunay(pts)
        # Four hull sides and one diagonal.
        assert len(tri) == 5
        assert len(tri.triangles) == 2
        assert tri.has_edge(1, 0)
        assert tri.has_edge(0, 2)

    @pytest.mark.parametrize('seed', [0, 1, 2])
    def test_scipy_matches_brute(self, seed):
        pts = random_points(25, 4.0, seed)
        assert spanners.l2_delaunay(pts).edge_set() == spanners.l2_delaunay(pts, method='brute').edge_set()

    def test_unknown_method(self):
        with pytest.raises(InvalidParameterError):
            spanners.l2_delaunay(random_points(5, 1.0, 0), method='fast')

    def test_empty_circle(self):
        coords = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]])
        assert not spanners.empty_circle_exists(coords, 0, 1)
        assert spanners.empty_circle_exists(coords, 0, 2)

    def test_linf_delaunay(self):
        pts = random_points(20, 3.0, 4)
        tri = spanners.linf_delaunay(pts)
        assert spanners.count_crossings(build_graph(pts, 'usg-linf').with_edges(
            tri.edges[:, 0], tri.edges[:, 1], np.ones(len(tri)))) == 0
        short = spanners.linf_delaunay(pts, max_dist=1.0)
        assert short.edge_set() <= tri.edge_set()


class TestFamilySpanner:

    @pytest.mark.parametrize('metric', ['udg-l2', 'udg-l1', 'udg-linf', 'usg-linf', 'usg-l1', 'usg-l2'])
    def test_stretch_and_planarity(self, metric):
        g = build_graph(random_points(40, 6.0, 11), metric)
        h = spanners.family_spanner(g)
        assert h.alpha == pytest.approx(spanners.declared_stretch(g.metric))
        assert h.graph.metric == g.metric
        assert h.m <= g.m
        stretch = spanners.verify_stretch(g, h)
        assert 1.0 <= stretch <= h.alpha + 1e-9
        assert spanners.count_crossings(h) == 0
        assert spanners.is_planar(h)

    def test_hop(self):
        g = build_graph(random_points(30, 5.0, 2), 'hop-udg')
        h = spanners.family_spanner(g)
        assert spanners.declared_stretch(g.metric) is None
        assert h.alpha == pytest.approx(max(1.0, spanners.verify_stretch(g, h)))
        assert spanners.is_planar(h)

    def test_dense_clique(self):
        # Every pair is within distance 2, so G is the complete graph on 30 vertices.
        g = build_graph(random_points(30, 1.4, 12), 'udg-l2')
        assert g.m == 30 * 29 // 2
        h = spanners.udg_spanner(g)
        assert h.m <= 3 * 30 - 6
        assert spanners.verify_stretch(g, h) <= spanners.UDG_STRETCH + 1e-9
        assert spanners.count_crossings(h) == 0

    def test_linf_delaunay_planar(self):
        pts = random_points(40, 5.0, 13)
        tri = spanners.linf_delaunay(pts)
        h = build_graph(pts, 'usg-linf').with_edges(tri.edges[:, 0], tri.edges[:, 1], np.ones(len(tri)))
        assert spanners.count_crossings(h) == 0
        assert len(tri) <= 3 * 40 - 6

    def test_wrong_family(self):
        g = build_graph(random_points(5, 2.0, 0), 'usg-linf')
        with pytest.raises(InvalidParameterError):
            spanners.udg_spanner(g)
        with pytest.raises(InvalidParameterError):
            spanners.hop_spanner(g)
        with pytest.raises(InvalidParameterError):
            spanners.usg_spanner(build_graph(random_points(5, 2.0, 0), 'udg-l2'))

    def test_lp_spanner(self):
        pts = random_points(20, 4.0, 5)
        g = build_graph(pts, 'udg-l1')
        base = spanners.udg_spanner(g)
        assert base.host.metric.label == 'udg-l2'
        h = spanners.lp_spanner(g, base)
        assert h.alpha == spanners.LP_LOW_STRETCH
        assert h.construction == 'udel-l1'
        # Same edges, scaled weights.
        assert h.m == base.m
        assert np.allclose(h.edges()[2], base.edges()[2] * math.sqrt(2))

        g2 = build_graph(pts, 'udg-l2')
        assert spanners.lp_spanner(g2, spanners.udg_spanner(g2)).alpha == spanners.UDG_STRETCH

        with pytest.raises(InvalidParameterError):
            spanners.lp_spanner(build_graph(random_points(20, 4.0, 6), 'udg-l1'), base)

        with pytest.raises(InvalidParameterError):
            spanners.lp_spanner(build_graph(pts, 'usg-l1'), base)

    def test_usg_lp_stretch(self):
        g = build_graph(random_points(10, 3.0, 0), 'usg-l1')
        h = spanners.family_spanner(g)
        assert h.alpha == pytest.approx(6.0)

    def test_induced_spanner(self):
        g = build_graph(random_points(30, 5.0, 3), 'udg-l2')
        h = spanners.induced_spanner(g, [0, 2, 4, 6, 8, 10])
        assert h.n == 6
        assert h.graph.origin.tolist() == [0, 2, 4, 6, 8, 10]

        with pytest.raises(InvalidParameterError):
            spanners.induced_spanner(g, [])

    def test_dump(self, tmp_path):
        g = build_graph(random_points(10, 3.0, 1), 'udg-l2')
        h = spanners.family_spanner(g)
        data = h.to_dict()
        assert data['alpha'] == spanners.UDG_STRETCH
        assert data['construction'] == 'udel'
        h.dump(str(tmp_path / 'spanner.json'))
        assert (tmp_path / 'spanner.json').exists()

    def test_bad_alpha(self):
        g = build_graph(random_points(5, 2.0, 0), 'udg-l2')
        with pytest.raises(InvalidParameterError):
            spanners.PlanarSpanner(g, g, 0.5, 'identity')


class TestVerifyStretch:

    def test_identity(self):
        g = build_graph(random_points(15, 3.0, 0), 'udg-l2')
        assert spanners.verify_stretch(g, g) == pytest.approx(1.0)

    def test_disconnecting(self):
        pts = PointSet.from_coords([(0, 0), (1, 0)])
        g = build_graph(pts, 'udg-l2')
        empty = g.with_edges(np.zeros(0), np.zeros(0), np.zeros(0))
        assert math.isinf(spanners.verify_stretch(g, empty))

    def test_no_pairs(self):
        g = build_graph(PointSet.from_coords([(0, 0), (5, 0)]), 'udg-l2')
        assert spanners.verify_stretch(g, g) == 1.0

    def test_sampled(self):
        g = build_graph(random_points(60, 6.0, 8), 'udg-l2')
        h = spanners.family_spanner(g)
        assert spanners.verify_stretch(g, h, max_exact=10, seed=3) <= spanners.verify_stretch(g, h) + 1e-12

    def test_vertex_count(self):
        g = build_graph(random_points(5, 2.0, 0), 'udg-l2')
        with pytest.raises(InvalidParameterError):
            spanners.verify_stretch(g, g.induced([0, 1]))


class TestCrossings:

    def test_cross(self):
        pts = PointSet.from_coords([(0, 0), (1, 1), (0, 1), (1, 0)])
        g = build_graph(pts, 'udg-l2')
        x = g.with_edges(np.array([0, 2]), np.array([1, 3]), np.ones(2))
        assert spanners.count_crossings(x) == 1
        assert not spanners.is_planar(build_graph(random_points(12, 1.0, 0), 'udg-l2'))

    def test_shared_endpoint(self):
        pts = PointSet.from_coords([(0, 0), (1, 0), (0, 1)])
        g = build_graph(pts, 'udg-l2')
        assert spanners.count_crossings(g) == 0
        assert spanners.is_planar(g)


class TestUsgClaims:

    def test_edge_bounds(self):
        g = build_graph(random_points(35, 5.0, 9), 'usg-linf')
        report, worst = spanners.usg_edge_bounds(spanners.usg_spanner(g))
        assert report.checked == g.m
        assert report
        assert worst <= 1.0 + 1e-9

    def test_crossing_sequence(self):
        pts = PointSet.from_coords([(0, 0), (1, 0), (0, 1), (1, 1)])
        tri = spanners.l2_delaunay(pts)
        diagonal = (0, 3) if not tri.has_edge(0, 3) else (1, 2)
        seq = spanners.crossing_sequence(tri, *diagonal)
        assert seq is not None
        assert len(seq) == 2
        assert seq[-1].high == seq[-1].low == diagonal[1]
        assert seq[0].t_in == pytest.approx(0.0, abs=1e-9)

    def test_crossing_claims(self):
        g = build_graph(random_points(35, 5.0, 9), 'usg-linf')
        h = spanners.usg_spanner(g)
        report, skipped = spanners.check_crossing_claims(h)
        assert report.checked + skipped <= g.m - h.m

        bare = spanners.PlanarSpanner(g, g, 1.0, 'identity')
        with pytest.raises(InvalidParameterError):
            spanners.check_crossing_claims(bare)
