import json

import numpy as np
import pandas as pd
import pytest

from unittest.mock import mock_open, patch

import IGCoreset.Collectors as collectors


class TestFormats:

    def test_infer_format(self):
        assert collectors.infer_format('out.json') == 'json'
        assert collectors.infer_format('OUT.JSON') == 'json'
        assert collectors.infer_format('out.csv') == 'csv'
        assert collectors.infer_format(None) == 'csv'
        assert collectors.infer_format('out.csv', 'json') == 'json'

        with pytest.raises(ValueError):
            collectors.infer_format('out.csv', 'xml')

    def test_plain(self):
        data = collectors._plain({'a': np.int64(3), 'b': np.array([1.5, 2.0]), 1: (np.bool_(True),)})
        assert data == {'a': 3, 'b': [1.5, 2.0], '1': [True]}
        assert type(data['a']) is int


class TestWriters:

    def test_write_json(self):
        m = mock_open()
        with patch('builtins.open', m, create=True):
            collectors.write_json({'b': np.float64(0.5), 'a': 1}, 'out.json')

        m.assert_called_once_with('out.json', 'w')
        written = ''.join(call.args[0] for call in m().write.call_args_list)
        assert json.loads(written) == {'a': 1, 'b': 0.5}
        assert written.index('"a"') < written.index('"b"')

    def test_write_json_stdout(self, capsys):
        collectors.write_json([1, 2])
        assert json.loads(capsys.readouterr().out) == [1, 2]

    def test_write_table(self, tmp_path):
        frame = pd.DataFrame({'x': [1.0 / 3.0], 'y': [2]})
        path = tmp_path / 'table.csv'
        collectors.write_table(frame, str(path))
        assert path.read_text().splitlines() == ['x,y', '0.333333333333,2']

        path = tmp_path / 'table.json'
        collectors.write_table(frame, str(path))
        assert json.loads(path.read_text()) == [{'x': pytest.approx(1.0 / 3.0), 'y': 2}]

    def test_write_table_stdout(self, capsys):
        collectors.write_table(pd.DataFrame({'x': [1]}), '-')
        assert capsys.readouterr().out.splitlines() == ['x', '1']


class TestCollector:

    def test__init__(self):
        col = collectors.Collector('Collector')
        assert col.id == 'Collector'
        assert len(col) == 0

    def test_collect(self):
        col = collectors.Collector('Collector')
        col.collect({'a': 1})
        col.collect([{'a': 2}, {'a': 3, 'b': 4}])
        assert len(col) == 3
        frame = col.to_frame()
        assert frame['a'].tolist() == [1, 2, 3]
        assert list(col.to_frame(['b', 'a']).columns) == ['b', 'a']


class TestFileCollector:

    def test__init__(self):
        col = collectors.FileCollector('Collector', 'rows.json')
        assert col.fmt == 'json'
        assert collectors.FileCollector('Collector', 'rows.txt').fmt == 'csv'
        assert collectors.FileCollector('Collector', None, 'json').fmt == 'json'

    def test_write_records(self, tmp_path):
        path = tmp_path / 'rows.csv'
        col = collectors.FileCollector('Collector', str(path))
        col.collect([{'a': 1, 'b': 3}, {'a': 2}])
        col.write_records()
        assert path.read_text().splitlines() == ['a,b', '1,3', '2,']
        assert len(col) == 2

        col.write_records(['b'])
        assert path.read_text().splitlines() == ['b', '3', '']

    def test_write_records_stdout(self, capsys):
        col = collectors.FileCollector('Collector', None, 'json')
        col.collect({'a': 1})
        col.write_records()
        assert json.loads(capsys.readouterr().out) == [{'a': 1}]


class TestMatrixCollector:

    def test__init__(self):
        col = collectors.MatrixCollector()
        assert col.id == 'MatrixCollector'
        assert col.filename is None
        assert col.fmt == 'csv'
        assert collectors.MatrixCollector('rows.json').fmt == 'json'

    def test_failures(self):
        col = collectors.MatrixCollector()
        assert list(col.failure_frame().columns) == ['experiment', 'seed', 'error', 'trace']
        assert len(col.failure_frame()) == 0

        col.fail({'experiment': 'x', 'seed': 1, 'error': 'ValueError: bad', 'trace': ''})
        frame = col.failure_frame()
        assert frame['seed'].tolist() == [1]

    def test_write_failures(self, tmp_path, capsys):
        col = collectors.MatrixCollector()
        col.fail({'experiment': 'x', 'seed': 1, 'error': 'ValueError: bad', 'trace': 'Traceback'})
        col.write_failures()
        assert capsys.readouterr().out.splitlines() == ['experiment,seed,error', 'x,1,ValueError: bad']

        path = tmp_path / 'failures.csv'
        col.write_failures(str(path))
        assert path.read_text().splitlines()[0] == 'experiment,seed,error'
