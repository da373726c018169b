import numpy as np
import pandas as pd
import pytest

import IGCoreset.Batching as batching
from IGCoreset.Collectors import MatrixCollector
from IGCoreset.Core import ConfigError


class TestParameterList:

    def test__init__(self):

        # Default case
        p_list = batching.ParameterList()
        assert len(p_list._parameters) == 0

        # Raise Attribute Error Case
        with pytest.raises(AttributeError):
            batching.ParameterList({32: "invalid key"})

        # Case with valid dictionary:
        p_list = batching.ParameterList({"n": 60, "k": (1, 2, 3)})
        assert len(p_list._parameters) == 2
        assert p_list._parameters["n"] == 60
        assert p_list._parameters["k"] == (1, 2, 3)

    def test_add_parameter(self):

        p_list = batching.ParameterList()

        with pytest.raises(AttributeError):
            p_list.add_parameter(32, "invalid key")

        p_list.add_parameter("n", 60)
        p_list.add_parameter("k", (1, 2, 3))
        assert len(p_list._parameters) == 2

        # Duplicate key
        with pytest.raises(KeyError):
            p_list.add_parameter("n", 60)

    def test_remove_parameter(self):

        p_list = batching.ParameterList({"n": 60})
        p_list.remove_parameter("n")
        assert len(p_list._parameters) == 0

        with pytest.raises(KeyError):
            p_list.remove_parameter("n")

    def test_build(self):
        p_list = batching.ParameterList({"n": 60, "metric": "udg-l2"})

        p_set = p_list.build()
        assert p_set == [{"n": 60, "metric": "udg-l2"}]

        p_list.add_parameter("k", (1, 2, 3, 4, 5))
        p_set = p_list.build()
        assert len(p_set) == 5
        for i in range(5):
            assert p_set[i]["metric"] == "udg-l2"
            assert p_set[i]["k"] == i + 1


class TestExperimentConfig:

    def test__init__(self):
        config = batching.ExperimentConfig()
        assert config.metric == 'udg-l2'
        assert config.seeds == [0]
        assert config.clients is None
        assert config.decompose and not config.timings

        with pytest.raises(ConfigError):
            batching.ExperimentConfig(colour='red')

    def test_from_dict(self):
        config = batching.ExperimentConfig.from_dict(
            {'n': '30', 'seeds': '3', 'decompose': 'no', 'clients': 'all', 'eps': ['0.1', '0.2']})
        assert config.n == 30
        assert config.seeds == [3]
        assert not config.decompose
        assert config.clients is None
        assert config.eps == [0.1, 0.2]

        with pytest.raises(ConfigError) as error:
            batching.ExperimentConfig.from_dict({'n': 'many'}, 'experiments[2]')
        assert error.value.field == 'experiments[2].n'

        with pytest.raises(ConfigError):
            batching.ExperimentConfig.from_dict({'colour': 'red'})

    def test_expand(self):
        config = batching.ExperimentConfig(metric=['udg-l2', 'usg-linf'], n=[20, 40], seeds=[0, 1])
        configs = config.expand()
        assert [(c.metric, c.n) for c in configs] == [('udg-l2', 20), ('udg-l2', 40), ('usg-linf', 20),
                                                      ('usg-linf', 40)]
        assert all(c.seeds == [0, 1] for c in configs)
        assert batching.ExperimentConfig(n=20).expand() == [batching.ExperimentConfig(n=20)]

    def test_validate(self):
        assert batching.ExperimentConfig().validate()

        with pytest.raises(ConfigError) as error:
            batching.ExperimentConfig(name='run', eps=1.5).validate()
        assert error.value.field == 'run.eps'

        invalid = [dict(n=[10, 20]), dict(generator='spiral'), dict(metric='disk'), dict(k=0), dict(z=0),
                   dict(delta=0.5), dict(seeds=[]), dict(trials=0), dict(preset='fast'), dict(box=0.0),
                   dict(spread=-1.0), dict(clients=500), dict(n=5, k=6)]
        for kwargs in invalid:
            with pytest.raises(ConfigError):
                batching.ExperimentConfig(**kwargs).validate()


class TestGenerate:

    def test_single_point(self):
        points = batching.generate(batching.ExperimentConfig(n=1, k=1))
        assert points.coords.tolist() == [[0.0, 0.0]]
        assert points.ids.tolist() == [0]

    def test_uniform(self):
        config = batching.ExperimentConfig(n=25, box=3.0)
        points = batching.generate(config, 4)
        assert len(points) == 25
        assert ((points.coords >= 0) & (points.coords <= 3.0)).all()
        assert np.array_equal(points.coords, batching.generate(config, 4).coords)
        assert not np.array_equal(points.coords, batching.generate(config, 5).coords)

    def test_gaussian_clusters(self):
        config = batching.ExperimentConfig(generator='gaussian-clusters', n=40, clusters=4, spread=0.1)
        points = batching.generate(config)
        assert len(points.meta['planted']) == 4
        assert len(points.meta['labels']) == 40
        planted = batching.planted_vertices(points)
        assert 1 <= len(planted) <= 4
        assert batching.planted_vertices(batching.generate(batching.ExperimentConfig(n=5))) == []

    def test_grid_jitter(self):
        config = batching.ExperimentConfig(generator='grid-jitter', n=10, box=6.0, jitter=0.0)
        points = batching.generate(config)
        # Four columns of spacing 1.5, filled row by row.
        assert points.coords[0].tolist() == pytest.approx([0.75, 0.75])
        assert points.coords[5].tolist() == pytest.approx([2.25, 2.25])

    def test_invalid(self):
        with pytest.raises(ConfigError):
            batching.generate(batching.ExperimentConfig(generator='spiral'))


def grid_config(**kwargs) -> batching.ExperimentConfig:
    values = dict(name='grid', generator='grid-jitter', n=16, box=4.0, k=2, trials=2)
    values.update(kwargs)
    return batching.ExperimentConfig(**values)


class TestRunCell:

    def test_rows(self):
        rows = batching.run_cell(grid_config(trials=3), 0)
        assert [r['trial'] for r in rows] == [0, 1, 2]
        row = rows[0]
        assert row['experiment'] == 'grid'
        assert row['hard_ok']
        assert row['depth_ok']
        assert row['crossings'] == 0
        assert row['stretch'] <= row['declared_stretch'] + 1e-9
        assert not any(key.startswith('t_') for key in row)

    def test_timings(self):
        rows = batching.run_cell(grid_config(timings=True, decompose=False), 1)
        assert {'t_generate', 't_graph', 't_spanner', 't_coreset', 't_verify'} <= set(rows[0])
        assert rows[0]['depth'] is None

    def test_clients(self):
        config = grid_config(clients=6)
        g_clients = batching.draw_clients(config, batching.build_graph(batching.generate(config, 0), 'udg-l2'), 0)
        assert len(g_clients) == 6
        assert (np.diff(g_clients) > 0).all()

    def test_depth_limit(self):
        assert batching.depth_limit(1) == 2.0
        assert batching.depth_limit(16) == 18.0


class TestRunMatrix:

    def test_failures_are_isolated(self):
        # Five points far apart cannot be served by one center.
        broken = batching.ExperimentConfig(name='broken', n=5, box=1000.0, k=1, decompose=False)
        report = batching.run_matrix([grid_config(seeds=[0, 1]), broken])
        assert len(report.rows) == 4
        assert report.rows['seed'].tolist() == [0, 0, 1, 1]
        assert len(report.failures) == 1
        assert report.failures['experiment'].tolist() == ['broken']
        assert not report.ok
        assert report.exit_code == 1

    def test_ok(self):
        report = batching.run_matrix([grid_config()])
        assert report.ok
        assert report.exit_code == 0

    def test_collector(self, tmp_path):
        path = tmp_path / 'rows.csv'
        collector = MatrixCollector(str(path))
        report = batching.run_matrix([grid_config()], collector=collector)
        assert len(collector) == len(report.rows) == 2
        collector.write_records()
        assert pd.read_csv(path)['trial'].tolist() == [0, 1]
