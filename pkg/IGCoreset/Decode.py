import json

from typing import Any, Dict, List, Optional

from IGCoreset.Batching import ExperimentConfig
from IGCoreset.Core import ConfigError
from IGCoreset.Coresets import WeightedCoreset
from IGCoreset.Geometry import PointSet
from IGCoreset.Graphs import GraphInstance


class Decoder:
    """Base experiment decoder.

    ``decode()`` turns a file into a list of validated, single-valued ``ExperimentConfig`` objects. A subclass only has
    to override ``open_file()`` so that it returns a dictionary of the following shape::

        {
            "defaults": {field: value, ...},         # optional, shared by every experiment
            "experiments": [
                {"name": "usg", field: value, ...},
                ...
            ]
        }

    A dictionary without ``experiments`` is read as a single experiment. Values may be lists for the expandable
    fields, in which case the experiment becomes several configs.
    """

    def open_file(self, file_name: str) -> dict:
        """You must override this function if you make your own decoder."""
        raise NotImplementedError('You cannot invoke the open_file() method of the base decoder class')

    def decode(self, file_path: str) -> List[ExperimentConfig]:
        """Reads ``file_path`` and returns the expanded configs in file order.

        Raises
        ------
        ConfigError
            If the file is empty or a field is invalid.
        """
        data = self.open_file(file_path)
        if data is None:
            raise ConfigError(file_path, 'unable to open the file for decoding.')
        defaults = dict(data.get('defaults', {}))
        entries = data['experiments'] if 'experiments' in data else [{k: v for k, v in data.items() if k != 'defaults'}]
        configs = []
        for i, entry in enumerate(entries):
            merged = dict(defaults)
            merged.update(entry)
            path = f'experiments[{i}]'
            for config in ExperimentConfig.from_dict(merged, path).expand():
                configs.append(config.validate())
        return configs


class JsonDecoder(Decoder):

    def open_file(self, file_name: str) -> dict:
        with open(file_name) as json_file:
            return json.load(json_file)


class KeyValueDecoder(Decoder):
    """Reads the plain ``key = value`` config format::

        # shared by every experiment
        seeds = 0, 1, 2
        trials = 20

        [usg]
        metric = usg-linf
        n = 30, 60, 120

    ``#`` starts a comment. Comma-separated values become lists. Keys before the first ``[name]`` header are
    defaults, and every header starts an experiment called ``name``.
    """

    @staticmethod
    def parse_value(text: str) -> Any:
        text = text.strip()
        if ',' in text:
            return [part.strip() for part in text.split(',') if part.strip()]
        return text

    def open_file(self, file_name: str) -> dict:
        with open(file_name) as config_file:
            return self.parse(config_file.read(), file_name)

    def parse(self, text: str, source: str = '<string>') -> Dict[str, Any]:
        """Parses config text.

        Raises
        ------
        ConfigError
            On a line that is neither a header, a comment nor a ``key = value`` pair.
        """
        defaults, experiments = {}, []
        current = defaults
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if line.startswith('[') and line.endswith(']'):
                current = {'name': line[1:-1].strip()}
                experiments.append(current)
                continue
            key, sep, value = line.partition('=')
            if not sep or not key.strip():
                raise ConfigError(f'{source}:{number}', f'expected "key = value", found "{raw.strip()}".')
            current[key.strip()] = self.parse_value(value)
        if not experiments:
            return defaults
        return {'defaults': defaults, 'experiments': experiments}


def read_points(path: str) -> PointSet:
    return PointSet.read(path)


def read_graph(path: str, points: PointSet) -> GraphInstance:
    """Reads a graph dump written by ``GraphInstance.dump`` over ``points``."""
    with open(path) as json_file:
        data = json.load(json_file)
    if data.get('ids') is not None and list(data['ids']) != points.ids.tolist():
        raise ValueError(f'Graph dump {path} was written for a different point set.')
    return GraphInstance.from_dict(data, points)


def read_coreset(path: str, g: Optional[GraphInstance] = None) -> WeightedCoreset:
    """Reads a ``coreset.json`` file. With ``g`` the member vertices are resolved from the point ids."""
    with open(path) as json_file:
        return WeightedCoreset.from_dict(json.load(json_file), g)
