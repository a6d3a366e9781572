"""Seeded samplers for ground-truth mappings, database pairs and planted instances."""
import logging
import os
from dataclasses import dataclass

import numpy as np

from src.errors import DomainError, IoError, ShapeError, SizeError

logger = logging.getLogger(__name__)


def substream(master_seed, *keys):
    """
    Independent random stream for (master_seed, *keys).

    Uses the counter-based Philox generator seeded through a SeedSequence whose
    spawn key is `keys`, so distinct key tuples never share a stream.
    """
    if int(master_seed) < 0 or any(int(k) < 0 for k in keys):
        raise DomainError(f"Seeds must be non-negative, got {(master_seed, *keys)}.")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def make_rng(seed):
    """Accepts an int, a (master_seed, *keys) tuple or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return substream(*seed)
    return substream(seed)


@dataclass(frozen=True)
class PartialMapping:
    """Injective partial map from left users 0..n_u-1 to right users 0..n_v-1."""
    pairs: tuple
    n_u: int
    n_v: int

    def __post_init__(self):
        pairs = tuple(sorted((int(u), int(v)) for u, v in self.pairs))
        object.__setattr__(self, 'pairs', pairs)
        us = [u for u, _ in pairs]
        vs = [v for _, v in pairs]
        if len(set(us)) != len(us) or len(set(vs)) != len(vs):
            raise DomainError(f"Mapping is not injective: {pairs}")
        if any(not 0 <= u < self.n_u for u in us) or any(not 0 <= v < self.n_v for v in vs):
            raise ShapeError(f"Mapping indices out of range for {self.n_u}x{self.n_v}: {pairs}")

    @classmethod
    def identity(cls, n, n_v=None):
        return cls(tuple((i, i) for i in range(n)), n, n if n_v is None else n_v)

    @property
    def size(self):
        return len(self.pairs)

    def as_dict(self):
        return dict(self.pairs)

    def u_indices(self):
        return np.array([u for u, _ in self.pairs], dtype=np.intp)

    def v_indices(self):
        return np.array([v for _, v in self.pairs], dtype=np.intp)

    def to_matrix(self):
        m = np.zeros((self.n_u, self.n_v))
        if self.pairs:
            m[self.u_indices(), self.v_indices()] = 1.0
        return m


@dataclass(frozen=True, eq=False)
class DatabasePair:
    a: np.ndarray
    b: np.ndarray

    @property
    def n_u(self):
        return self.a.shape[0]

    @property
    def n_v(self):
        return self.b.shape[0]

    @property
    def dims(self):
        return self.a.shape[1]


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    w: np.ndarray
    mu: float
    truth: PartialMapping


def _check_mapping(mapping, n_u, n_v):
    if mapping.n_u != n_u or mapping.n_v != n_v:
        raise ShapeError(f"Mapping is declared on {mapping.n_u}x{mapping.n_v}, instance is {n_u}x{n_v}.")


def sample_mapping(n_u, n_v, size, seed):
    """Uniformly random injective partial map with `size` pairs."""
    if size < 0 or size > min(n_u, n_v):
        logger.error(f"Mapping size {size} is not in [0, min({n_u}, {n_v})].")
        raise SizeError(f"size must be in [0, {min(n_u, n_v)}], got {size}.")
    rng = make_rng(seed)
    us = np.sort(rng.choice(n_u, size=size, replace=False))
    vs = rng.choice(n_v, size=size, replace=False)
    return PartialMapping(tuple(zip(us.tolist(), vs.tolist())), n_u, n_v)


def sample_database_pair(rho, mapping, n_u, n_v, seed):
    """
    Samples canonical-form databases.

    Every feature is standard normal. For (u, v) in the mapping, dimension i of
    B(v) is rho_i * A(u)_i + sqrt(1 - rho_i²) * Z_i.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if rho.size and np.max(np.abs(rho)) >= 1.0:
        raise DomainError("Every correlation coefficient must satisfy |rho_i| < 1.")
    _check_mapping(mapping, n_u, n_v)
    rng = make_rng(seed)
    a = rng.standard_normal((n_u, rho.size))
    b = rng.standard_normal((n_v, rho.size))
    if mapping.size and rho.size:
        us, vs = mapping.u_indices(), mapping.v_indices()
        b[vs] = rho * a[us] + np.sqrt(1.0 - rho ** 2) * b[vs]
    return DatabasePair(a, b)


def sample_planted(mu, mapping, n_u, n_v, seed):
    """W[u, v] ~ N(mu, 1) on the mapping and N(0, 1) elsewhere, all independent."""
    if not mu > 0:
        logger.error(f"Planted mean gap must be positive, got {mu}.")
        raise DomainError(f"mu must be > 0, got {mu}.")
    _check_mapping(mapping, n_u, n_v)
    rng = make_rng(seed)
    w = rng.standard_normal((n_u, n_v))
    if mapping.size:
        w[mapping.u_indices(), mapping.v_indices()] += mu
    return PlantedInstance(w, float(mu), mapping)


def sample_raw_pair(model, n_pairs, seed):
    """Draws n_pairs jointly Gaussian raw feature pairs from a CorrelationModel."""
    rng = make_rng(seed)
    joint = rng.multivariate_normal(model.joint_mean(), model.joint_covariance(), size=n_pairs, method='eigh')
    return joint[:, :model.d_a], joint[:, model.d_a:]


def dump_instance(path, instance, truth=None, rho=None):
    """
    Writes an instance to a NumPy .npz container.

    Arrays: ``w`` and ``mu`` (planted) or ``a`` and ``b`` (database), optional
    ``rho``, and ``truth`` as a k x 2 int64 array of (u, v) rows together with
    ``n_u`` / ``n_v``.
    """
    arrays = {}
    if isinstance(instance, PlantedInstance):
        arrays['w'] = instance.w
        arrays['mu'] = np.float64(instance.mu)
        truth = instance.truth if truth is None else truth
    elif isinstance(instance, DatabasePair):
        arrays['a'] = instance.a
        arrays['b'] = instance.b
    else:
        raise TypeError(f"Cannot dump object of type {type(instance).__name__}.")
    if rho is not None:
        arrays['rho'] = np.asarray(rho, dtype=float)
    if truth is not None:
        arrays['truth'] = np.array(truth.pairs, dtype=np.int64).reshape(-1, 2)
        arrays['n_u'] = np.int64(truth.n_u)
        arrays['n_v'] = np.int64(truth.n_v)

    try:
        directory = os.path.dirname(str(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        np.savez(path, **arrays)
    except OSError as e:
        logger.error(f"Error writing instance to {path}: {e}", exc_info=True)
        raise IoError(f"Could not write {path}: {e}") from e
    logger.info(f"Instance written to {path}")


def load_instance(path):
    """Reads an instance written by dump_instance. Returns (instance, truth, rho)."""
    try:
        with np.load(path) as data:
            arrays = {key: data[key] for key in data.files}
    except OSError as e:
        logger.error(f"Error reading instance from {path}: {e}", exc_info=True)
        raise IoError(f"Could not read {path}: {e}") from e

    truth = None
    if 'truth' in arrays:
        truth = PartialMapping(tuple(map(tuple, arrays['truth'].tolist())), int(arrays['n_u']), int(arrays['n_v']))
    rho = arrays.get('rho')
    if 'w' in arrays:
        instance = PlantedInstance(arrays['w'], float(arrays['mu']), truth)
    else:
        instance = DatabasePair(arrays['a'], arrays['b'])
    return instance, truth, rho
