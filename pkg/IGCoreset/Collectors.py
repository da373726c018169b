import json
import sys

import numpy as np
import pandas as pd

from typing import Any, Dict, Iterable, List, Optional, Union

# Float format used for every CSV the package writes.
FLOAT_FORMAT = '%.12g'


def _plain(value: Any) -> Any:
    """Converts numpy scalars and arrays into JSON-serialisable values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def infer_format(path: Optional[str], fmt: Optional[str] = None) -> str:
    """``fmt`` if given, otherwise ``json`` for ``.json`` paths and ``csv`` for everything else."""
    if fmt is not None:
        if fmt not in ('csv', 'json'):
            raise ValueError(f'Unknown format "{fmt}". Expected csv or json.')
        return fmt
    return 'json' if path is not None and path.lower().endswith('.json') else 'csv'


def write_table(frame: pd.DataFrame, path: Optional[str] = None, fmt: Optional[str] = None):
    """Writes ``frame`` as CSV or as a JSON array of records. ``None`` or ``'-'`` writes to stdout."""
    fmt = infer_format(path, fmt)
    target = sys.stdout if path in (None, '-') else path
    if fmt == 'csv':
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT)
    else:
        write_json(frame.to_dict(orient='records'), path)


def write_json(data: Any, path: Optional[str] = None):
    """Writes ``data`` as indented JSON with sorted keys. ``None`` or ``'-'`` writes to stdout."""
    text = json.dumps(_plain(data), indent=1, sort_keys=True)
    if path in (None, '-'):
        sys.stdout.write(text + '\n')
    else:
        with open(path, 'w') as json_file:
            json_file.write(text + '\n')


class Collector:
    """Base class of report collectors. Records are kept in the ``records`` list.

    Override ``collect()`` to change what a record looks like.
    """

    def __init__(self, id: str):
        self.id = id
        self.records = []

    def collect(self, record: Union[Dict[str, Any], Iterable[Dict[str, Any]]]):
        """Appends one record, or every record of an iterable of records."""
        if isinstance(record, dict):
            self.records.append(record)
        else:
            self.records.extend(record)

    def to_frame(self, columns: Optional[List[str]] = None) -> pd.DataFrame:
        frame = pd.DataFrame(self.records)
        if columns is not None:
            frame = frame.reindex(columns=columns)
        return frame

    def __len__(self) -> int:
        return len(self.records)


class FileCollector(Collector):
    """A collector that writes its records to ``filename`` as CSV or JSON.

    The format follows the file extension unless ``fmt`` is given. A ``None`` filename writes to stdout.
    """

    def __init__(self, id: str, filename: Optional[str], fmt: Optional[str] = None):
        super().__init__(id)
        self.filename = filename
        self.fmt = infer_format(filename, fmt)

    def write_records(self, columns: Optional[List[str]] = None):
        write_table(self.to_frame(columns), self.filename, self.fmt)


class MatrixCollector(FileCollector):
    """Collects the rows of an experiment matrix and the failures of isolated cells.

    Rows go to ``filename`` on ``write_records()``. Failures are written on their own, always as CSV.
    """

    FAILURE_COLUMNS = ['experiment', 'seed', 'error', 'trace']

    def __init__(self, filename: Optional[str] = None, fmt: Optional[str] = None, id: str = 'MatrixCollector'):
        super().__init__(id, filename, fmt)
        self.failures = []

    def fail(self, failure: Dict[str, Any]):
        self.failures.append(failure)

    def failure_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.failures, columns=self.FAILURE_COLUMNS)

    def write_failures(self, path: Optional[str] = None):
        """Writes ``experiment, seed, error`` of every failed cell. ``None`` writes to stdout."""
        write_table(self.failure_frame()[['experiment', 'seed', 'error']], path, 'csv')
