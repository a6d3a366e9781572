"""
Correlation statistics of a pair of Gaussian databases.

The canonical form whitens both feature spaces and rotates them so that the
cross-covariance becomes diag(rho). Every downstream quantity (information
density, mutual information, bound evaluation) depends on the model only
through rho.
"""
import configparser
import logging
import os
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from src.errors import ConfigError, DimensionMismatch, DomainError, NotPositiveDefinite, NotValidJoint

logger = logging.getLogger(__name__)

# relative to the largest singular value
RANK_TOLERANCE = 1e-12
# relative to the trace of the joint covariance
PSD_TOLERANCE = 1e-10


def _as_matrix(value, rows, cols, name):
    arr = np.array(value, dtype=float).reshape(rows, cols) if np.size(value) == rows * cols else None
    if arr is None:
        raise DimensionMismatch(f"{name} must have {rows}x{cols} entries, got {np.size(value)}.")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Means and covariances of the raw feature vectors of the two databases."""
    mu_a: np.ndarray
    mu_b: np.ndarray
    sigma_a: np.ndarray
    sigma_b: np.ndarray
    sigma_ab: np.ndarray

    def __post_init__(self):
        sigma_a = np.atleast_2d(np.asarray(self.sigma_a, dtype=float))
        sigma_b = np.atleast_2d(np.asarray(self.sigma_b, dtype=float))
        d_a, d_b = sigma_a.shape[0], sigma_b.shape[0]
        if sigma_a.shape != (d_a, d_a) or sigma_b.shape != (d_b, d_b):
            raise DimensionMismatch(f"Covariances must be square, got {sigma_a.shape} and {sigma_b.shape}.")
        mu_a = np.zeros(d_a) if self.mu_a is None else self.mu_a
        mu_b = np.zeros(d_b) if self.mu_b is None else self.mu_b
        object.__setattr__(self, 'sigma_a', _as_matrix(sigma_a, d_a, d_a, 'sigma_a'))
        object.__setattr__(self, 'sigma_b', _as_matrix(sigma_b, d_b, d_b, 'sigma_b'))
        object.__setattr__(self, 'sigma_ab', _as_matrix(self.sigma_ab, d_a, d_b, 'sigma_ab'))
        object.__setattr__(self, 'mu_a', _as_matrix(mu_a, 1, d_a, 'mu_a').ravel())
        object.__setattr__(self, 'mu_b', _as_matrix(mu_b, 1, d_b, 'mu_b').ravel())
        for name in ('sigma_a', 'sigma_b'):
            s = getattr(self, name)
            if not np.allclose(s, s.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(s).max())):
                logger.error(f"{name} is not symmetric.")
                raise NotValidJoint(f"{name} must be symmetric.")

    @property
    def d_a(self):
        return self.sigma_a.shape[0]

    @property
    def d_b(self):
        return self.sigma_b.shape[0]

    def joint_covariance(self):
        return np.block([[self.sigma_a, self.sigma_ab], [self.sigma_ab.T, self.sigma_b]])

    def joint_mean(self):
        return np.concatenate([self.mu_a, self.mu_b])


def validate_rho(rho):
    """Returns rho as a 1-D float array, raising DomainError unless every |rho_i| < 1."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if rho.ndim != 1:
        raise DomainError(f"rho must be a vector, got shape {rho.shape}.")
    if rho.size and (not np.all(np.isfinite(rho)) or np.max(np.abs(rho)) >= 1.0):
        logger.error(f"Correlation vector outside (-1, 1): max |rho| = {np.max(np.abs(rho))}.")
        raise DomainError("Every correlation coefficient must satisfy |rho_i| < 1.")
    return rho


@dataclass(frozen=True, eq=False)
class CanonicalCorrelation:
    rho: np.ndarray

    def __post_init__(self):
        rho = validate_rho(self.rho).copy()
        rho.setflags(write=False)
        object.__setattr__(self, 'rho', rho)

    @property
    def dims(self):
        return int(self.rho.size)

    @property
    def i_xy(self):
        return mutual_information(self.rho)

    @property
    def rho_max(self):
        return float(np.max(np.abs(self.rho))) if self.rho.size else 0.0


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> matrix @ x + offset, applied row-wise to arrays of samples."""
    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.matrix.shape[1]:
            raise DimensionMismatch(f"Expected {self.matrix.shape[1]} features, got {x.shape[1]}.")
        return x @ self.matrix.T + self.offset


@dataclass(frozen=True)
class CanonicalTransformPair:
    t_a: AffineMap
    t_b: AffineMap

    def apply_a(self, x):
        return self.t_a(x)

    def apply_b(self, y):
        return self.t_b(y)


@dataclass(frozen=True)
class ScorePairMoments:
    true_mean: float
    true_var: float
    false_mean: float
    false_var: float


def _cholesky(matrix, name):
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as e:
        logger.error(f"Cholesky factorization of {name} failed: {e}")
        raise NotPositiveDefinite(f"{name} is not strictly positive definite.") from e


def _check_joint(model):
    joint = model.joint_covariance()
    min_eig = float(linalg.eigvalsh(joint)[0])
    if min_eig < -PSD_TOLERANCE * float(np.trace(joint)):
        logger.error(f"Joint covariance has eigenvalue {min_eig:.3e} below tolerance.")
        raise NotValidJoint(f"Joint covariance is not positive semidefinite (min eigenvalue {min_eig:.3e}).")


def _whitened_cross_covariance(model):
    _check_joint(model)
    la = _cholesky(model.sigma_a, 'sigma_a')
    lb = _cholesky(model.sigma_b, 'sigma_b')
    # La^-1 Σab Lb^-T
    left = linalg.solve_triangular(la, model.sigma_ab, lower=True)
    cross = linalg.solve_triangular(lb, left.T, lower=True).T
    return la, lb, cross


def canonicalize(model):
    """
    Computes the canonical correlation vector and the affine maps producing it.

    Returns:
        tuple[CanonicalCorrelation, CanonicalTransformPair]
    """
    la, lb, cross = _whitened_cross_covariance(model)
    u, s, vt = linalg.svd(cross, full_matrices=False)
    if s.size and s[0] > 0:
        keep = s > RANK_TOLERANCE * s[0]
    else:
        keep = np.zeros(s.shape, dtype=bool)
    rho = s[keep]
    if rho.size and rho[0] >= 1.0:
        logger.error(f"Largest canonical correlation is {rho[0]}; features are perfectly correlated.")
        raise NotValidJoint("Canonical correlation of 1 or more: the joint covariance is degenerate.")

    # rows of e_a / e_b are the canonical directions
    if keep.any():
        e_a = linalg.solve_triangular(la, u[:, keep], lower=True, trans='T').T
        e_b = linalg.solve_triangular(lb, vt[keep].T, lower=True, trans='T').T
    else:
        e_a, e_b = np.zeros((0, model.d_a)), np.zeros((0, model.d_b))
    transforms = CanonicalTransformPair(
        t_a=AffineMap(e_a, -e_a @ model.mu_a),
        t_b=AffineMap(e_b, -e_b @ model.mu_b),
    )
    canonical = CanonicalCorrelation(rho)
    logger.debug(f"Canonical form: D={canonical.dims}, I_XY={canonical.i_xy:.6f}, rho_max={canonical.rho_max:.6f}")
    return canonical, transforms


def _inverse_sqrt(matrix, name):
    eigvals, eigvecs = linalg.eigh(matrix)
    if eigvals[0] <= 0:
        raise NotPositiveDefinite(f"{name} is not strictly positive definite.")
    return (eigvecs / np.sqrt(eigvals)) @ eigvecs.T


def condition1_margin(model):
    """Spectral norm of Σa^-1/2 Σab Σb^-1/2, computed through symmetric square roots."""
    _check_joint(model)
    _cholesky(model.sigma_a, 'sigma_a')
    _cholesky(model.sigma_b, 'sigma_b')
    if not np.any(model.sigma_ab):
        return 0.0
    whitened = _inverse_sqrt(model.sigma_a, 'sigma_a') @ model.sigma_ab @ _inverse_sqrt(model.sigma_b, 'sigma_b')
    return float(np.linalg.norm(whitened, 2))


def mutual_information(rho):
    """I_XY = -1/2 Σ log(1 - rho_i²), in nats."""
    rho = validate_rho(rho)
    if not rho.size:
        return 0.0
    return float(-0.5 * np.sum(np.log1p(-rho ** 2), dtype=np.longdouble))


def score_moments(rho):
    """Mean and variance of the information density of a true pair and of a false pair."""
    rho = validate_rho(rho)
    r2 = rho ** 2
    i_xy = mutual_information(rho)
    return ScorePairMoments(
        true_mean=i_xy,
        true_var=float(np.sum(r2, dtype=np.longdouble)),
        false_mean=float(i_xy - np.sum(r2 / (1.0 - r2), dtype=np.longdouble)),
        false_var=float(np.sum(r2 * (1.0 + r2) / (1.0 - r2) ** 2, dtype=np.longdouble)),
    )


def _read_floats(config, section, option, expected, path):
    raw = config.get(section, option)
    try:
        values = [float(v) for v in raw.replace('\n', ',').split(',') if v.strip()]
    except ValueError as e:
        raise ConfigError(f"[{section}] {option} in '{path}' is not a list of numbers: {e}") from e
    if len(values) != expected:
        raise ConfigError(f"[{section}] {option} in '{path}' has {len(values)} values, expected {expected}.")
    return values


def load_correlation_model(path):
    """
    Reads a CorrelationModel from an INI file.

    Schema::

        [DIMENSIONS]
        D_A = 2
        D_B = 2
        [MEANS]            ; optional, zeros by default
        MU_A = 0, 0
        MU_B = 0, 0
        [COVARIANCE]       ; row-major
        SIGMA_A = 2, 0, 0, 2
        SIGMA_B = 1, 0, 0, 1
        SIGMA_AB = 0.6, 0, 0, 0.8
    """
    if not os.path.exists(path):
        logger.error(f"Model file '{path}' not found.")
        raise ConfigError(f"Model file '{path}' not found.")

    config = configparser.ConfigParser(inline_comment_prefixes=(';', '#'))
    try:
        config.read(path)
        d_a = config.getint('DIMENSIONS', 'D_A')
        d_b = config.getint('DIMENSIONS', 'D_B')
        if d_a < 1 or d_b < 1:
            raise ConfigError(f"Dimensions in '{path}' must be >= 1.")
        mu_a = _read_floats(config, 'MEANS', 'MU_A', d_a, path) if config.has_option('MEANS', 'MU_A') else None
        mu_b = _read_floats(config, 'MEANS', 'MU_B', d_b, path) if config.has_option('MEANS', 'MU_B') else None
        sigma_a = _read_floats(config, 'COVARIANCE', 'SIGMA_A', d_a * d_a, path)
        sigma_b = _read_floats(config, 'COVARIANCE', 'SIGMA_B', d_b * d_b, path)
        sigma_ab = _read_floats(config, 'COVARIANCE', 'SIGMA_AB', d_a * d_b, path)
    except (configparser.Error, ValueError, ConfigError) as e:
        logger.error(f"Error reading model file '{path}': {e}")
        raise ConfigError(f"Invalid model file '{path}': {e}") from e

    model = CorrelationModel(
        mu_a=mu_a,
        mu_b=mu_b,
        sigma_a=np.reshape(sigma_a, (d_a, d_a)),
        sigma_b=np.reshape(sigma_b, (d_b, d_b)),
        sigma_ab=np.reshape(sigma_ab, (d_a, d_b)),
    )
    logger.info(f"Loaded correlation model from '{path}' (d_a={d_a}, d_b={d_b}).")
    return model
