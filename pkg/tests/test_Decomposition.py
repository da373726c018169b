import numpy as np
import pytest

import IGCoreset.Decomposition as decomposition
from IGCoreset.Core import DisconnectedError, InvalidParameterError
from IGCoreset.Geometry import PointSet
from IGCoreset.Graphs import build_graph
from IGCoreset.Separators import depth_bound


def instance(n: int = 60, box: float = 6.0, metric: str = 'udg-l2', seed: int = 0):
    pts = PointSet.from_coords(np.random.default_rng(seed).uniform(0, box, size=(n, 2)))
    g = build_graph(pts, metric)
    _, labels = g.components()
    keep = np.nonzero(labels == np.bincount(labels).argmax())[0]
    return g.induced(keep) if len(keep) < g.n else g


class TestRegion:

    def test_membership(self):
        region = decomposition.Region(3, np.array([2, 5, 9]), decomposition.RegionKind.COMPONENT, 0, 1, 2)
        assert region.contains(5) and not region.contains(4)
        assert region.contains_all([2, 9]) and not region.contains_all([2, 10])
        assert region.local(9) == 2
        assert region.is_leaf
        assert len(region) == 3

        with pytest.raises(KeyError):
            region.local(4)

    def test_to_dict(self):
        region = decomposition.Region(0, np.arange(4), decomposition.RegionKind.ROOT, -1, 0, 4)
        data = region.to_dict()
        assert data['kind'] == 'root'
        assert data['leaf']
        assert 'separator' not in data


class TestSplitPath:

    def test_split(self):
        marked = np.zeros(10, dtype=bool)
        marked[[2, 5]] = True
        assert decomposition.split_path([0, 1, 2, 3, 4, 5, 6], marked) == [[0, 1, 2], [2, 3, 4, 5], [5, 6]]
        assert decomposition.split_path([2, 3, 5], marked) == [[2, 3, 5]]
        assert decomposition.split_path([0, 1], marked) == [[0, 1]]
        assert decomposition.split_path([2], marked) == [[2]]

    def test_at_most_two_marked(self):
        rng = np.random.default_rng(0)
        marked = rng.random(30) < 0.4
        path = rng.permutation(30).tolist()
        pieces = decomposition.split_path(path, marked)
        for piece in pieces:
            assert marked[piece].sum() <= 2
        assert set().union(*map(set, pieces)) == set(path)


class TestBuildTree:

    @pytest.mark.parametrize('metric', ['udg-l2', 'usg-linf', 'hop-udg'])
    def test_structure(self, metric):
        g = instance(metric=metric)
        X = np.arange(0, g.n, 2)
        tree = decomposition.build_tree(g, X)
        assert decomposition.check_tree(tree)
        assert tree.root.marked == len(X)
        assert tree.depth <= 4 * np.log2(len(X)) + 2
        for leaf in tree.leaves():
            assert leaf.marked <= 2
        for region in tree.regions:
            for c in region.children:
                assert tree[c].parent == region.id
                assert c > region.id

    def test_depth_bound(self):
        g = instance(n=80, box=5.0, seed=3)
        tree = decomposition.build_tree(g, np.arange(g.n))
        assert tree.depth <= 2 * depth_bound(g.n) + 2

    def test_few_marked(self):
        g = instance()
        tree = decomposition.build_tree(g, [0, 1])
        assert len(tree) == 1
        assert tree.root.is_leaf

    def test_disconnected_root(self):
        pts = PointSet.from_coords([(0, 0), (1, 0), (2, 0), (10, 0), (11, 0), (12, 0)])
        g = build_graph(pts, 'udg-l2')
        tree = decomposition.build_tree(g, np.arange(6))
        kids = [tree[c] for c in tree.root.children]
        assert [k.kind for k in kids] == [decomposition.RegionKind.COMPONENT] * 2
        assert kids[0].vertices.tolist() == [0, 1, 2]
        assert decomposition.check_tree(tree)

    def test_bad_marked(self):
        g = instance(n=10)
        with pytest.raises(InvalidParameterError):
            decomposition.build_tree(g, [g.n])

    def test_deterministic(self):
        g = instance(seed=4)
        X = np.arange(g.n)
        assert decomposition.build_tree(g, X).to_dict() == decomposition.build_tree(g, X).to_dict()

    def test_dump(self, tmp_path):
        g = instance(n=30)
        tree = decomposition.build_tree(g, np.arange(g.n))
        path = tmp_path / 'tree.json'
        tree.dump(str(path))
        assert path.exists()
        levels = tree.level_stats()
        assert len(levels) == tree.depth + 1
        assert levels[0]['regions'] == 1

    def test_region_graph(self):
        g = instance(n=30)
        tree = decomposition.build_tree(g, np.arange(g.n))
        region = tree.leaves()[0]
        gi = tree.region_graph(region.id)
        assert gi.n == len(region)
        assert gi is tree.region_graph(region.id)


class TestRootLeafPath:

    def test_chain(self):
        g = instance()
        tree = decomposition.build_tree(g, np.arange(g.n))
        for s in range(0, g.n, 7):
            chain = decomposition.root_leaf_path(tree, s)
            assert chain[0] is tree.root
            assert chain[-1].is_leaf
            for parent, child in zip(chain, chain[1:]):
                assert child.parent == parent.id
                assert child.contains(s)

        with pytest.raises(IndexError):
            decomposition.root_leaf_path(tree, g.n)


class TestSeparatingVertex:

    def test_records(self):
        g = instance(n=70, box=7.0, seed=2)
        tree = decomposition.build_tree(g, np.arange(g.n))
        rng = np.random.default_rng(1)
        records = [decomposition.separating_vertex(tree, int(p), int(s))
                   for p, s in rng.integers(0, g.n, size=(40, 2))]
        for rec in records:
            assert rec.d_gi == pytest.approx(rec.d_g)
            if not rec.same_leaf:
                assert rec.x >= 0
                assert tree[rec.region].separator is not None
                assert rec.u in rec.path and rec.v in rec.path
        report = decomposition.check_separation_claims(tree, records, eps=0.5)
        assert {v[0] for v in report.violations} <= {'long-path'}

    def test_same_vertex(self):
        g = instance(n=30)
        tree = decomposition.build_tree(g, np.arange(g.n))
        rec = decomposition.separating_vertex(tree, 3, 3)
        assert rec.same_leaf
        assert rec.d_g == 0.0

    def test_disconnected(self):
        pts = PointSet.from_coords([(0, 0), (1, 0), (2, 0), (10, 0), (11, 0), (12, 0)])
        g = build_graph(pts, 'udg-l2')
        tree = decomposition.build_tree(g, np.arange(6))
        with pytest.raises(DisconnectedError):
            decomposition.separating_vertex(tree, 0, 5)
