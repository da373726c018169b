import json
import math

import numpy as np
import pandas as pd

from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from IGCoreset.Core import InvalidParameterError

SQRT2 = math.sqrt(2.0)

# Perturbation used before Delaunay predicates: x += id*zeta, y += (id^2 mod M)*zeta
PERTURB_ZETA = 1e-9
PERTURB_MODULUS = 1009


class Point2D:
    """A point of the plane with an integer ``id``.

    Attributes
    ----------
    id : int
        Unique identifier within its ``PointSet``.
    x : float
        The x coordinate.
    y : float
        The y coordinate.
    """

    __slots__ = ['id', 'x', 'y']

    def __init__(self, id: int, x: float, y: float):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f'Point {id} has non-finite coordinates ({x}, {y}).')
        self.id = int(id)
        self.x = float(x)
        self.y = float(y)

    @property
    def xy(self) -> Tuple[float, float]:
        return self.x, self.y

    def __eq__(self, other) -> bool:
        return isinstance(other, Point2D) and (self.id, self.x, self.y) == (other.id, other.x, other.y)

    def __hash__(self) -> int:
        return hash((self.id, self.x, self.y))

    def __repr__(self) -> str:
        return f'Point2D({self.id}, {self.x}, {self.y})'


class PointSet:
    """An immutable collection of ``Point2D`` objects sorted by ``id``.

    Vertices of every graph built over a ``PointSet`` are the positions ``0..n-1`` of this sorted order, so the
    "smallest vertex id" tie-break used throughout the package is the same as "smallest index".

    Point sets can be created from coordinates or read from disk::

        pts = PointSet.from_coords([(0, 0), (1, 0), (3, 0)])
        pts = PointSet.read('points.csv')   # CSV header id,x,y
        pts = PointSet.read('points.json')  # [{"id": 0, "x": 0.0, "y": 0.0}, ...]

    Attributes
    ----------
    ids : numpy.ndarray
        Integer ids, strictly increasing.
    coords : numpy.ndarray
        ``(n, 2)`` float array of coordinates aligned with ``ids``.
    meta : Dict[str, Any]
        Free-form metadata (e.g. the planted centers of a generator).
    """

    __slots__ = ['ids', 'coords', 'meta', '_index']

    def __init__(self, points: Iterable[Point2D], meta: Optional[Dict[str, Any]] = None):
        pts = sorted(points, key=lambda p: p.id)
        ids = np.array([p.id for p in pts], dtype=np.int64)
        if len(ids) > 1 and np.any(np.diff(ids) == 0):
            raise ValueError('Point ids must be unique within a PointSet.')
        self.ids = ids
        self.coords = np.array([[p.x, p.y] for p in pts], dtype=float).reshape(-1, 2)
        self.coords.setflags(write=False)
        self.ids.setflags(write=False)
        self.meta = {} if meta is None else dict(meta)
        self._index = {int(i): k for k, i in enumerate(ids)}

    @staticmethod
    def from_coords(coords: Union[np.ndarray, Sequence[Sequence[float]]], ids: Optional[Sequence[int]] = None,
                    meta: Optional[Dict[str, Any]] = None) -> 'PointSet':
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        ids = range(len(coords)) if ids is None else ids
        return PointSet([Point2D(i, x, y) for i, (x, y) in zip(ids, coords)], meta)

    @staticmethod
    def read(path: str) -> 'PointSet':
        """Reads a point set from a CSV (``id,x,y`` header) or a JSON array of ``{id, x, y}`` objects.

        Raises
        ------
        ValueError
            If the file does not contain the ``id``, ``x`` and ``y`` fields.
        """
        if path.lower().endswith('.json'):
            with open(path) as json_file:
                data = json.load(json_file)
            if isinstance(data, dict):
                data = data['points']
            frame = pd.DataFrame(data)
        else:
            frame = pd.read_csv(path)
        missing = {'id', 'x', 'y'} - set(frame.columns)
        if missing:
            raise ValueError(f'Point file {path} is missing the columns {sorted(missing)}.')
        return PointSet.from_frame(frame)

    @staticmethod
    def from_frame(frame: pd.DataFrame) -> 'PointSet':
        return PointSet([Point2D(int(r.id), float(r.x), float(r.y)) for r in frame.itertuples(index=False)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'id': self.ids, 'x': self.coords[:, 0], 'y': self.coords[:, 1]})

    def write(self, path: str):
        """Writes the point set as CSV, or as JSON when ``path`` ends with ``.json``."""
        if path.lower().endswith('.json'):
            with open(path, 'w') as json_file:
                json.dump(self.to_frame().to_dict(orient='records'), json_file, indent=1)
        else:
            self.to_frame().to_csv(path, index=False, float_format='%.17g')

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, index: int) -> Point2D:
        return Point2D(int(self.ids[index]), float(self.coords[index, 0]), float(self.coords[index, 1]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def index_of(self, id: int) -> int:
        """Returns the position of the point with ``id``.

        Raises
        ------
        KeyError
            If no such point exists.
        """
        if id not in self._index:
            raise KeyError(f'PointSet has no point with id {id}.')
        return self._index[id]

    def subset(self, indices: Sequence[int]) -> 'PointSet':
        indices = np.asarray(indices, dtype=np.int64)
        return PointSet.from_coords(self.coords[indices], self.ids[indices], self.meta)

    def same_points(self, other: 'PointSet') -> bool:
        return len(self) == len(other) and np.array_equal(self.ids, other.ids) and np.array_equal(self.coords,
                                                                                                  other.coords)

    def perturbed(self, zeta: float = PERTURB_ZETA, modulus: int = PERTURB_MODULUS) -> np.ndarray:
        """Returns coordinates moved to general position.

        Point ``i`` (by id) is shifted by ``i * zeta`` in x and ``(i^2 mod modulus) * zeta`` in y. The shift is
        deterministic so every predicate evaluated on the perturbed coordinates is reproducible.
        """
        ids = self.ids.astype(float)
        shift = np.column_stack([ids * zeta, np.mod(self.ids.astype(np.int64) ** 2, modulus) * zeta])
        return self.coords + shift


class NormKind:
    """The ``l_p`` norm used for edge weights, with ``1 <= p <= inf``.

    Attributes
    ----------
    p : float
        The norm exponent. ``math.inf`` represents the Chebyshev norm.
    """

    __slots__ = ['p']

    _NAMES = {'l1': 1.0, 'l2': 2.0, 'linf': math.inf, 'inf': math.inf}

    def __init__(self, p: float = 2.0):
        p = float(p)
        if math.isnan(p) or p < 1.0:
            raise InvalidParameterError('p', p, 'Norm exponent must satisfy p >= 1.')
        self.p = p

    @staticmethod
    def parse(name: Union[str, float, 'NormKind']) -> 'NormKind':
        """Parses ``'l1'``, ``'l2'``, ``'linf'``, ``'l3.5'`` or a number into a ``NormKind``."""
        if isinstance(name, NormKind):
            return name
        if isinstance(name, (int, float)):
            return NormKind(name)
        key = name.strip().lower()
        if key in NormKind._NAMES:
            return NormKind(NormKind._NAMES[key])
        if key.startswith('l'):
            try:
                return NormKind(float(key[1:]))
            except ValueError:
                pass
        raise InvalidParameterError('norm', name, 'Expected l1, l2, linf or l<p>.')

    @property
    def label(self) -> str:
        if math.isinf(self.p):
            return 'linf'
        return f'l{self.p:g}'

    def of(self, dx: Union[float, np.ndarray], dy: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Evaluates ``||(dx, dy)||_p``, vectorised over numpy arrays."""
        adx, ady = np.abs(dx), np.abs(dy)
        if math.isinf(self.p):
            return np.maximum(adx, ady)
        if self.p == 1.0:
            return adx + ady
        if self.p == 2.0:
            return np.hypot(adx, ady)
        return (adx ** self.p + ady ** self.p) ** (1.0 / self.p)

    def l2_distortion(self) -> Tuple[float, float]:
        """Returns ``(c3, c4)`` with ``c3*||v||_2 <= ||v||_p <= c4*||v||_2`` for every planar vector ``v``."""
        if self.p < 2.0:
            return 1.0, SQRT2 ** (2.0 / self.p - 1.0)
        if self.p > 2.0:
            return SQRT2 ** (2.0 / self.p - 1.0) if not math.isinf(self.p) else 1.0 / SQRT2, 1.0
        return 1.0, 1.0

    def __eq__(self, other) -> bool:
        return isinstance(other, NormKind) and self.p == other.p

    def __hash__(self) -> int:
        return hash(self.p)

    def __repr__(self) -> str:
        return f'NormKind({self.label})'


L1, L2, LINF = NormKind(1.0), NormKind(2.0), NormKind(math.inf)


def _xy(p: Union[Point2D, Sequence[float], np.ndarray]) -> Tuple[float, float]:
    if isinstance(p, Point2D):
        return p.x, p.y
    return float(p[0]), float(p[1])


def dist(p: Union[Point2D, Sequence[float]], q: Union[Point2D, Sequence[float]], norm: NormKind = L2) -> float:
    """Returns ``||p - q||_p`` for two points or coordinate pairs.

    Parameters
    ----------
    p, q : Union[Point2D, Sequence[float]]
        The two points.
    norm : NormKind
        The norm. Defaults to ``l2``.

    Returns
    -------
    float
        The distance.
    """
    px, py = _xy(p)
    qx, qy = _xy(q)
    return float(norm.of(px - qx, py - qy))


def pairwise(coords: np.ndarray, norm: NormKind = L2, other: Optional[np.ndarray] = None) -> np.ndarray:
    """Returns the matrix of ``norm`` distances between the rows of ``coords`` (and ``other`` if given)."""
    other = coords if other is None else other
    diff = coords[:, None, :] - other[None, :, :]
    return norm.of(diff[..., 0], diff[..., 1])


class DxyStats(NamedTuple):
    """Coordinate gaps between two points. ``D`` is the Chebyshev distance and ``delta`` the smaller gap."""
    dx: float
    dy: float
    D: float
    delta: float


def dxy_stats(p: Union[Point2D, Sequence[float]], q: Union[Point2D, Sequence[float]]) -> DxyStats:
    px, py = _xy(p)
    qx, qy = _xy(q)
    dx, dy = abs(px - qx), abs(py - qy)
    return DxyStats(dx, dy, max(dx, dy), min(dx, dy))


class AxisSquare:
    """A closed axis-parallel square.

    Attributes
    ----------
    center : Tuple[float, float]
        The centre of the square.
    half_side : float
        Half of the side length. Always positive.
    """

    __slots__ = ['center', 'half_side']

    def __init__(self, center: Sequence[float], half_side: float):
        if not half_side > 0:
            raise InvalidParameterError('half_side', half_side, 'must be positive.')
        self.center = (float(center[0]), float(center[1]))
        self.half_side = float(half_side)

    @property
    def side(self) -> float:
        return 2.0 * self.half_side

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """``(xmin, ymin, xmax, ymax)``."""
        cx, cy = self.center
        h = self.half_side
        return cx - h, cy - h, cx + h, cy + h

    def contains(self, p: Union[Point2D, Sequence[float]], tol: float = 1e-12) -> bool:
        x, y = _xy(p)
        cx, cy = self.center
        return max(abs(x - cx), abs(y - cy)) <= self.half_side + tol

    def on_boundary(self, p: Union[Point2D, Sequence[float]], tol: float = 1e-9) -> bool:
        x, y = _xy(p)
        cx, cy = self.center
        return abs(max(abs(x - cx), abs(y - cy)) - self.half_side) <= tol

    def __repr__(self) -> str:
        return f'AxisSquare(center={self.center}, half_side={self.half_side})'


def _first_uncovered(lo: float, hi: float, starts: np.ndarray, ends: np.ndarray) -> Optional[float]:
    """Returns a point of ``[lo, hi]`` outside every closed interval ``[starts[i], ends[i]]``, or ``None``."""
    keep = (ends >= lo) & (starts <= hi)
    starts, ends = starts[keep], ends[keep]
    if len(starts) == 0:
        return lo
    order = np.argsort(starts, kind='stable')
    starts, ends = starts[order], ends[order]
    covering = starts <= lo
    if not np.any(covering):
        return lo
    reach = float(np.max(ends[covering]))
    for s, e in zip(starts[~covering], ends[~covering]):
        if s > reach:
            return 0.5 * (reach + min(s, hi)) if reach < hi else None
        reach = max(reach, float(e))
    return 0.5 * (reach + hi) if reach < hi else None


def empty_axis_square(p: Union[Point2D, Sequence[float]], q: Union[Point2D, Sequence[float]],
                      others: np.ndarray) -> Optional[AxisSquare]:
    """Returns an axis-parallel square with ``p`` and ``q`` on its boundary containing none of ``others``.

    Every square with ``p`` and ``q`` on its boundary contains a square of side ``D(p, q)`` that also has them on its
    boundary, so only the one-parameter family of side ``D`` is swept. A third point blocks a closed interval of the
    sliding offset; the square exists iff these intervals leave part of the offset range uncovered.

    Parameters
    ----------
    p, q : Union[Point2D, Sequence[float]]
        The two boundary points.
    others : numpy.ndarray
        ``(m, 2)`` coordinates of every other point.

    Returns
    -------
    Optional[AxisSquare]
        A witness square, or ``None``.

    Raises
    ------
    InvalidParameterError
        If ``p`` and ``q`` coincide.
    """
    px, py = _xy(p)
    qx, qy = _xy(q)
    if px == qx and py == qy:
        raise InvalidParameterError('q', (qx, qy), 'Points p and q must be distinct.')
    others = np.asarray(others, dtype=float).reshape(-1, 2)
    dx, dy = abs(px - qx), abs(py - qy)
    # Slide along the axis with the smaller gap.
    if dx >= dy:
        fixed, slide, fo, so = (px, qx), (py, qy), others[:, 0], others[:, 1]
    else:
        fixed, slide, fo, so = (py, qy), (px, qx), others[:, 1], others[:, 0]
    D = max(dx, dy)
    fmin, fmax = min(fixed), max(fixed)
    lo, hi = max(slide) - D, min(slide)
    inside = (fo >= fmin) & (fo <= fmax)
    t = _first_uncovered(lo, hi, so[inside] - D, so[inside])
    if t is None:
        return None
    center_f, center_s = fmin + 0.5 * D, t + 0.5 * D
    center = (center_f, center_s) if dx >= dy else (center_s, center_f)
    return AxisSquare(center, 0.5 * D)


def empty_axis_square_exists(p: Point2D, q: Point2D, pts: PointSet, coords: Optional[np.ndarray] = None) -> bool:
    """Returns ``True`` iff some axis-parallel square has ``p`` and ``q`` on its boundary and no other point of ``pts``
    in its interior or on its boundary.

    Parameters
    ----------
    p, q : Point2D
        Members of ``pts``.
    pts : PointSet
        The point set.
    coords : Optional[numpy.ndarray]
        Coordinates to use instead of ``pts.coords`` (e.g. perturbed ones). Defaults to ``None``.

    Raises
    ------
    InvalidParameterError
        If ``p`` and ``q`` are the same point.
    """
    if p.id == q.id:
        raise InvalidParameterError('q', q.id, 'Points p and q must be distinct.')
    coords = pts.coords if coords is None else coords
    i, j = pts.index_of(p.id), pts.index_of(q.id)
    mask = np.ones(len(pts), dtype=bool)
    mask[[i, j]] = False
    return empty_axis_square(coords[i], coords[j], coords[mask]) is not None


def grid_cells(coords: np.ndarray, mu: float) -> np.ndarray:
    """Returns the integer ``(floor(x/mu), floor(y/mu))`` cell of every row of ``coords``."""
    return np.floor(np.asarray(coords, dtype=float) / mu).astype(np.int64)


class MuNet:
    """A ``mu``-net of a ball.

    Attributes
    ----------
    members : List[int]
        Net vertices, sorted.
    cover : Dict[int, int]
        Maps every ball vertex to the net vertex of its grid cell.
    mu : float
        Grid side.
    covering_radius : float
        Guaranteed bound ``c4 * sqrt(2) * mu`` on the distance from a ball vertex to its net vertex.
    size_bound : float
        Grid-cell count bound ``K * max(r, mu)^2 / mu^2``.
    K : float
        The constant of ``size_bound``.
    """

    __slots__ = ['members', 'cover', 'mu', 'covering_radius', 'size_bound', 'K']

    def __init__(self, members: List[int], cover: Dict[int, int], mu: float, covering_radius: float,
                 size_bound: float, K: float):
        self.members = members
        self.cover = cover
        self.mu = mu
        self.covering_radius = covering_radius
        self.size_bound = size_bound
        self.K = K

    def __len__(self) -> int:
        return len(self.members)

    def nearest(self, v: int, distances: np.ndarray) -> int:
        """Returns the net member closest to ``v`` under the vertex-indexed row ``distances``, smallest id on ties."""
        ds = distances[self.members]
        return self.members[int(np.argmin(ds))]


def mu_net(points: PointSet, ball: Sequence[int], mu: float, c1: float, c4: float, radius: Optional[float] = None,
           spread: float = 1.0) -> MuNet:
    """Builds a ``mu``-net of ``ball`` by keeping the smallest vertex of every occupied grid cell of side ``mu``.

    Two vertices of one cell are at Euclidean distance at most ``sqrt(2) * mu < c1``, hence adjacent with weight at most
    ``c4 * sqrt(2) * mu``.

    Parameters
    ----------
    points : PointSet
        The embedding.
    ball : Sequence[int]
        Vertex indices of the ball ``B(v, r)``.
    mu : float
        Grid side. Must satisfy ``0 < mu < c1 / sqrt(2)``.
    c1, c4 : float
        Locally Euclidean constants of the instance.
    radius : Optional[float]
        The ball radius ``r`` used for the size bound. Defaults to ``mu``.
    spread : float
        Euclidean extent per unit of graph distance (``1/c3`` for weighted families, ``2`` for hop metrics).

    Returns
    -------
    MuNet
        The net.

    Raises
    ------
    InvalidParameterError
        If ``mu`` is out of range.
    """
    if not (0.0 < mu < c1 / SQRT2):
        raise InvalidParameterError('mu', mu, f'Expected 0 < mu < c1/sqrt(2) = {c1 / SQRT2:.6g}.')
    ball = np.unique(np.asarray(ball, dtype=np.int64))
    cells = grid_cells(points.coords[ball], mu)
    reps = {}
    cover = {}
    for v, cell in zip(ball, map(tuple, cells)):
        # ball is sorted so the first vertex of a cell is its smallest.
        rep = reps.setdefault(cell, int(v))
        cover[int(v)] = rep
    r = mu if radius is None else max(float(radius), mu)
    K = (2.0 * spread + 2.0) ** 2
    return MuNet(sorted(reps.values()), cover, mu, c4 * SQRT2 * mu, K * r * r / (mu * mu), K)
