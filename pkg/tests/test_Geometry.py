import math

import numpy as np
import pytest

from hypothesis import given, settings, strategies as st

import IGCoreset.Geometry as geometry
from IGCoreset.Core import InvalidParameterError


class TestPointSet:

    def test__init__(self):
        pts = geometry.PointSet([geometry.Point2D(5, 1.0, 2.0), geometry.Point2D(2, 0.0, 0.0)])
        assert pts.ids.tolist() == [2, 5]
        assert pts.coords.tolist() == [[0.0, 0.0], [1.0, 2.0]]
        assert pts.index_of(5) == 1

        with pytest.raises(KeyError):
            pts.index_of(3)

        with pytest.raises(ValueError):
            geometry.PointSet([geometry.Point2D(1, 0, 0), geometry.Point2D(1, 1, 1)])

    def test_immutable(self):
        pts = geometry.PointSet.from_coords([(0, 0), (1, 0)])
        with pytest.raises(ValueError):
            pts.coords[0, 0] = 5.0

    def test_read_write_csv(self, tmp_path):
        pts = geometry.PointSet.from_coords([(0.1, 0.2), (1.0 / 3.0, 2.5)], ids=[10, 11])
        path = str(tmp_path / 'points.csv')
        pts.write(path)
        assert geometry.PointSet.read(path).same_points(pts)

    def test_read_write_json(self, tmp_path):
        pts = geometry.PointSet.from_coords([(0.1, 0.2), (1.0 / 3.0, 2.5)])
        path = str(tmp_path / 'points.json')
        pts.write(path)
        assert geometry.PointSet.read(path).same_points(pts)

    def test_read_missing_column(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('id,x\n0,1.0\n')
        with pytest.raises(ValueError):
            geometry.PointSet.read(str(path))

    def test_subset(self):
        pts = geometry.PointSet.from_coords([(0, 0), (1, 0), (2, 0)], ids=[4, 5, 6])
        sub = pts.subset([0, 2])
        assert sub.ids.tolist() == [4, 6]

    def test_perturbed(self):
        pts = geometry.PointSet.from_coords([(0, 0), (0, 0), (1, 1)])
        moved = pts.perturbed()
        assert np.allclose(moved, pts.coords, atol=1e-5)
        assert not np.array_equal(moved[0], moved[1])
        assert np.array_equal(moved, pts.perturbed())


class TestNormKind:

    def test_parse(self):
        assert geometry.NormKind.parse('l1') == geometry.L1
        assert geometry.NormKind.parse('LINF') == geometry.LINF
        assert geometry.NormKind.parse('l3.5').p == 3.5
        assert geometry.NormKind.parse(2) == geometry.L2

        with pytest.raises(InvalidParameterError):
            geometry.NormKind.parse('euclid')

        with pytest.raises(InvalidParameterError):
            geometry.NormKind(0.5)

    def test_of(self):
        assert geometry.L1.of(3.0, -4.0) == 7.0
        assert geometry.L2.of(3.0, 4.0) == 5.0
        assert geometry.LINF.of(3.0, -4.0) == 4.0
        assert geometry.NormKind(3).of(1.0, 1.0) == pytest.approx(2 ** (1 / 3))

    def test_label(self):
        assert geometry.LINF.label == 'linf'
        assert geometry.NormKind(1.5).label == 'l1.5'

    @given(st.floats(1.0, 10.0), st.floats(-5, 5), st.floats(-5, 5))
    def test_l2_distortion(self, p, dx, dy):
        norm = geometry.NormKind(p)
        c3, c4 = norm.l2_distortion()
        l2 = math.hypot(dx, dy)
        value = norm.of(dx, dy)
        assert c3 * l2 <= value + 1e-9
        assert value <= c4 * l2 + 1e-9


class TestDistances:

    def test_dist(self):
        assert geometry.dist((0, 0), (3, 4)) == 5.0
        assert geometry.dist(geometry.Point2D(0, 0, 0), (3, 4), geometry.LINF) == 4.0

    def test_pairwise(self):
        coords = np.array([[0.0, 0.0], [3.0, 4.0]])
        d = geometry.pairwise(coords)
        assert d.tolist() == [[0.0, 5.0], [5.0, 0.0]]

    def test_dxy_stats(self):
        stats = geometry.dxy_stats((0, 0), (1, -3))
        assert stats == geometry.DxyStats(1.0, 3.0, 3.0, 1.0)


class TestEmptyAxisSquare:

    def test_no_others(self):
        square = geometry.empty_axis_square((0, 0), (1, 0.5), np.empty((0, 2)))
        assert square is not None
        assert square.on_boundary((0, 0))
        assert square.on_boundary((1, 0.5))

    def test_blocked(self):
        # The only sliding squares of side 1 through (0,0) and (1,0) all contain (0.5, 0).
        assert geometry.empty_axis_square((0, 0), (1, 0), np.array([[0.5, 0.0]])) is None

    def test_same_point(self):
        with pytest.raises(InvalidParameterError):
            geometry.empty_axis_square((1, 1), (1, 1), np.empty((0, 2)))

    def test_exists(self):
        pts = geometry.PointSet.from_coords([(0, 0), (1, 0), (0.5, 0)])
        assert not geometry.empty_axis_square_exists(pts[0], pts[1], pts)
        assert geometry.empty_axis_square_exists(pts[0], pts[2], pts)

        with pytest.raises(InvalidParameterError):
            geometry.empty_axis_square_exists(pts[0], pts[0], pts)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=2, max_size=8, unique=True))
    def test_witness_is_empty(self, coords):
        coords = 0.1 * np.array(coords, dtype=float)
        p, q, others = coords[0], coords[1], coords[2:]
        square = geometry.empty_axis_square(p, q, others)
        if square is not None:
            assert square.on_boundary(p) and square.on_boundary(q)
            for o in others:
                assert not square.contains(o, tol=-1e-9)


class TestMuNet:

    def test_mu_net(self):
        pts = geometry.PointSet.from_coords([(0.01, 0.01), (0.02, 0.03), (0.35, 0.35), (0.36, 0.37)])
        net = geometry.mu_net(pts, [0, 1, 2, 3], 0.1, 1.0, 1.0, radius=0.5)
        assert net.members == [0, 2]
        assert net.cover == {0: 0, 1: 0, 2: 2, 3: 2}
        assert net.covering_radius == pytest.approx(SQRT2_MU)
        assert len(net) <= net.size_bound

    def test_mu_range(self):
        pts = geometry.PointSet.from_coords([(0, 0)])
        with pytest.raises(InvalidParameterError):
            geometry.mu_net(pts, [0], 0.8, 1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            geometry.mu_net(pts, [0], 0.0, 1.0, 1.0)

    def test_nearest(self):
        net = geometry.MuNet([0, 2], {}, 0.1, 0.1, 1.0, 1.0)
        assert net.nearest(1, np.array([0.5, 0.0, 0.4])) == 2
        assert net.nearest(1, np.array([0.4, 0.0, 0.4])) == 0


SQRT2_MU = math.sqrt(2) * 0.1
