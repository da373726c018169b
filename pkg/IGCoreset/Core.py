import hashlib
import logging
import math

import numpy as np

from typing import Any, Dict, Optional, Union


LOGGER_NAME = 'IGCORESET'


def get_logger(logger: Optional[logging.Logger] = None) -> logging.Logger:
    """Returns ``logger`` if one is supplied, otherwise the package logger.

    The package logger is ``logging.getLogger('IGCORESET')`` set to ``logging.INFO``. Every long-running operation in
    ``IGCoreset`` accepts an optional logger and routes it through this function.

    Parameters
    ----------
    logger : Optional[logging.Logger]
        A custom logger. Defaults to ``None``.

    Returns
    -------
    logging.Logger
        The logger to use.
    """
    if logger is None:
        logger = logging.getLogger(LOGGER_NAME)
        if logger.level == logging.NOTSET:
            logger.setLevel(logging.INFO)
    return logger


def derive_rng(seed: Optional[int], *labels: Union[str, int]) -> np.random.Generator:
    """Derives an independent random stream from a seed and a sequence of labels.

    Streams are backed by the counter-based ``numpy.random.Philox`` bit generator. The Philox key is a BLAKE2b digest of
    ``seed`` and ``labels`` so ``derive_rng(7, 'trial', 3)`` and ``derive_rng(7, 'trial', 4)`` never overlap, which
    keeps parallel trials reproducible regardless of execution order::

        rng = derive_rng(7, 'sample')
        rng.random()  # Identical on every run.

    Parameters
    ----------
    seed : Optional[int]
        The root seed. ``None`` is treated as ``0``.
    labels : Union[str, int]
        Stream labels.

    Returns
    -------
    numpy.random.Generator
        The derived generator.
    """
    seed = 0 if seed is None else int(seed)
    h = hashlib.blake2b(digest_size=16)
    h.update(str(seed).encode('utf-8'))
    for label in labels:
        h.update(b'/')
        h.update(str(label).encode('utf-8'))
    key = int.from_bytes(h.digest(), 'little')
    return np.random.Generator(np.random.Philox(key=key))


class ConstantsPreset:
    """Named constants used by the centroid and coreset machinery.

    Two presets ship with the package::

        paper  # gamma_support=1600, gamma_landmark=1539
        desk   # gamma_support=2, gamma_landmark=2

    ``paper`` holds the constants the size and error bounds are proved with. They make hop radii and net balls exceed
    the diameter of any desk-scale instance, so experiments run the ``desk`` preset and check the error inequalities
    empirically.

    Attributes
    ----------
    name : str
        Preset name.
    gamma_support : float
        Multiplier of the support hop radius ``l``.
    gamma_landmark : float
        Landmark rounding parameter. The landmark resolution is ``mu = eps / (gamma_landmark * z)``.
    size_constant : float
        The ``c`` of the desk coreset size ``ceil(c * k * log(k+1)^2 / eps^2)``.
    """

    __slots__ = ['name', 'gamma_support', 'gamma_landmark', 'size_constant']

    def __init__(self, name: str, gamma_support: float, gamma_landmark: float, size_constant: float = 20.0):
        if gamma_support <= 0 or gamma_landmark <= 0:
            raise InvalidParameterError('gamma', (gamma_support, gamma_landmark), 'gamma values must be positive.')
        if size_constant <= 0:
            raise InvalidParameterError('size_constant', size_constant, 'must be positive.')
        self.name = name
        self.gamma_support = float(gamma_support)
        self.gamma_landmark = float(gamma_landmark)
        self.size_constant = float(size_constant)

    def support_mu(self, eps: float, z: int) -> float:
        """Grid side of the support graph, ``eps^2 / z^2``."""
        return (eps / z) ** 2

    def landmark_mu(self, eps: float, z: int) -> float:
        """Rounding resolution of the landmark tuples, ``eps / (gamma_landmark * z)``."""
        return eps / (self.gamma_landmark * z)

    def hop_radius(self, eps: float, z: int, alpha: float, c1p: float, c2p: float) -> int:
        """Support hop radius ``l = gamma_support * z * alpha * c2' / (c1' * eps)``, floored."""
        return int(math.floor(self.gamma_support * z * alpha * c2p / (c1p * eps)))

    def coreset_size(self, k: int, eps: float) -> int:
        """Desk coreset sample count ``ceil(c * k * log(k+1)^2 / eps^2)``."""
        return int(math.ceil(self.size_constant * k * math.log(k + 1) ** 2 / eps ** 2))

    def to_dict(self) -> Dict[str, Any]:
        return {s: getattr(self, s) for s in self.__slots__}

    def __repr__(self) -> str:
        return f'ConstantsPreset({self.to_dict()})'


PRESETS = {
    'paper': dict(gamma_support=1600.0, gamma_landmark=1539.0, size_constant=20.0),
    'desk': dict(gamma_support=2.0, gamma_landmark=2.0, size_constant=20.0),
}


def get_preset(name: str = 'desk', **overrides) -> ConstantsPreset:
    """Returns a fresh ``ConstantsPreset`` by name with ``overrides`` applied.

    Raises
    ------
    KeyError
        If ``name`` is not a known preset.
    """
    if name not in PRESETS:
        raise KeyError(f'Unknown preset "{name}". Valid presets are {sorted(PRESETS)}.')
    values = dict(PRESETS[name])
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in values:
            raise KeyError(f'Preset has no constant named "{key}".')
        values[key] = value
    return ConstantsPreset(name, **values)


################################################################################
#                                 Exceptions                                   #
################################################################################

class InvalidParameterError(ValueError):
    """Exception raised when an operation receives a parameter outside its documented range.

    Attributes:
    -----------
    name : str
        Name of the offending parameter.
    value : Any
        The value received.
    message : str
        Explanation of error.
    """

    def __init__(self, name: str, value: Any, reason: str = ''):
        self.name = name
        self.value = value
        self.message = f'Invalid value {value!r} for parameter "{name}". {reason}'.strip()
        super(InvalidParameterError, self).__init__(self.message)


class PreconditionError(Exception):
    """Exception raised when an operation is called outside its precondition.

    Attributes:
    -----------
    operation : str
        The operation that was called.
    message : str
        Explanation of error.
    """

    def __init__(self, operation: str, reason: str):
        self.operation = operation
        self.message = f'{operation}: {reason}'
        super(PreconditionError, self).__init__(self.message)


class DisconnectedError(Exception):
    """Exception raised when two vertices that must be connected lie in different components.

    Attributes:
    -----------
    u, v : int
        The vertices involved.
    message : str
        Explanation of error.
    """

    def __init__(self, u: int, v: int, reason: str = ''):
        self.u = u
        self.v = v
        self.message = f'Vertices {u} and {v} are not connected. {reason}'.strip()
        super(DisconnectedError, self).__init__(self.message)


class TrivialRegionError(Exception):
    """Exception raised by the separator when the marked weight of a region is below 3. The caller should make the
    region a leaf.

    Attributes:
    -----------
    total : float
        Total marked weight of the region.
    message : str
        Explanation of error.
    """

    def __init__(self, total: float):
        self.total = total
        self.message = f'Region has total weight {total} < 3 and cannot be separated.'
        super(TrivialRegionError, self).__init__(self.message)


class BalanceError(Exception):
    """Exception raised when no separator achieves the accepted balance of 2/3.

    Attributes:
    -----------
    balance : float
        Best balance achieved.
    message : str
        Explanation of error.
    """

    def __init__(self, balance: float):
        self.balance = balance
        self.message = f'Best separator balance {balance:.4f} exceeds the accepted bound 2/3.'
        super(BalanceError, self).__init__(self.message)


class DecompositionError(Exception):
    """Exception raised when the decomposition cannot continue, e.g. a spanner disconnects a connected region.

    Attributes:
    -----------
    region : int
        ``id`` of the region being processed.
    message : str
        Explanation of error.
    """

    def __init__(self, region: int, reason: str):
        self.region = region
        self.message = f'Region {region}: {reason}'
        super(DecompositionError, self).__init__(self.message)


class InvariantViolationError(Exception):
    """Exception raised when an internal consistency check fails.

    Attributes:
    -----------
    invariant : str
        Short name of the violated property.
    message : str
        Explanation of error.
    """

    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        self.message = f'Invariant "{invariant}" violated: {detail}'
        super(InvariantViolationError, self).__init__(self.message)


class BudgetExceededError(Exception):
    """Exception raised when an exhaustive computation would exceed its configured budget.

    Attributes:
    -----------
    size : float
        The requested size.
    budget : float
        The allowed size.
    message : str
        Explanation of error.
    """

    def __init__(self, what: str, size: float, budget: float):
        self.size = size
        self.budget = budget
        self.message = f'{what} requires {size} evaluations which exceeds the budget of {budget}.'
        super(BudgetExceededError, self).__init__(self.message)


class ConfigError(ValueError):
    """Exception raised for invalid experiment configurations.

    Attributes:
    -----------
    field : str
        Dotted path of the offending field.
    message : str
        Explanation of error.
    """

    def __init__(self, field: str, reason: str):
        self.field = field
        self.message = f'Invalid config field "{field}": {reason}'
        super(ConfigError, self).__init__(self.message)
