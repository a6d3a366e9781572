"""Score matrices consumed by the estimators."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from src.errors import DimensionMismatch, DomainError, NotPositiveDefinite
from src.model import mutual_information

logger = logging.getLogger(__name__)

DATABASE_INFO_DENSITY = 'database-info-density'
PLANTED_SHIFTED = 'planted-shifted'


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    s: np.ndarray
    kind: str

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.s, dtype=float))
        if not np.all(np.isfinite(s)):
            raise DomainError("Score matrix has non-finite entries.")
        object.__setattr__(self, 's', s)

    @property
    def n_u(self):
        return self.s.shape[0]

    @property
    def n_v(self):
        return self.s.shape[1]


def info_density_canonical(db, rho):
    """
    Information density G[u, v] of every pair, for canonical-form databases.

    G[u, v] = Σ_i -½log(1-ρ_i²) - (ρ_i²(x_i²+y_i²) - 2ρ_i x_i y_i) / (2(1-ρ_i²))
    with x = A(u), y = B(v). Cost O(D·n_u·n_v).
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if db.a.shape[1] != rho.size or db.b.shape[1] != rho.size:
        logger.error(f"Database dims {db.a.shape[1]}/{db.b.shape[1]} do not match {rho.size} correlations.")
        raise DimensionMismatch(f"Databases have {db.a.shape[1]}/{db.b.shape[1]} features, rho has {rho.size}.")
    i_xy = mutual_information(rho)
    r2 = rho ** 2
    quad = r2 / (2.0 * (1.0 - r2))
    cross = rho / (1.0 - r2)
    qa = np.sum(db.a ** 2 * quad, axis=1, dtype=np.longdouble).astype(float)
    qb = np.sum(db.b ** 2 * quad, axis=1, dtype=np.longdouble).astype(float)
    g = i_xy - qa[:, None] - qb[None, :] + (db.a * cross) @ db.b.T
    return ScoreMatrix(g, DATABASE_INFO_DENSITY)


def _cho(matrix, name):
    try:
        return linalg.cho_factor(matrix, lower=True)
    except linalg.LinAlgError as e:
        logger.error(f"Cholesky factorization of {name} failed: {e}")
        raise NotPositiveDefinite(f"{name} is not strictly positive definite.") from e


def _logdet(factor):
    return 2.0 * float(np.sum(np.log(np.diag(factor[0]))))


def info_density_raw(a_raw, b_raw, model):
    """
    Information density computed directly from raw features.

    log f_XY(x, y) - log f_X(x) - log f_Y(y), expanded through the inverse joint
    covariance. Slower than the canonical path; kept for cross-validation.
    """
    a_raw = np.atleast_2d(np.asarray(a_raw, dtype=float))
    b_raw = np.atleast_2d(np.asarray(b_raw, dtype=float))
    if a_raw.shape[1] != model.d_a or b_raw.shape[1] != model.d_b:
        raise DimensionMismatch(
            f"Raw features have {a_raw.shape[1]}/{b_raw.shape[1]} columns, model expects {model.d_a}/{model.d_b}.")

    joint = _cho(model.joint_covariance(), 'joint covariance')
    fa = _cho(model.sigma_a, 'sigma_a')
    fb = _cho(model.sigma_b, 'sigma_b')
    joint_inv = linalg.cho_solve(joint, np.eye(model.d_a + model.d_b))
    d_a = model.d_a
    p = joint_inv[:d_a, :d_a] - linalg.cho_solve(fa, np.eye(d_a))
    r = joint_inv[d_a:, d_a:] - linalg.cho_solve(fb, np.eye(model.d_b))
    q = joint_inv[:d_a, d_a:]

    x = a_raw - model.mu_a
    y = b_raw - model.mu_b
    qx = np.einsum('ij,jk,ik->i', x, p, x)
    qy = np.einsum('ij,jk,ik->i', y, r, y)
    offset = -0.5 * (_logdet(joint) - _logdet(fa) - _logdet(fb))
    g = offset - 0.5 * (qx[:, None] + qy[None, :]) - x @ q @ y.T
    return ScoreMatrix(g, DATABASE_INFO_DENSITY)


def planted_score(inst):
    """W_G = μW - μ²/2; true pairs have mean ζ = μ²/2 and variance 2ζ."""
    mu = inst.mu
    return ScoreMatrix(mu * np.asarray(inst.w, dtype=float) - 0.5 * mu ** 2, PLANTED_SHIFTED)
