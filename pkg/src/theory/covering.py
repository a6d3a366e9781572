"""
Upper bound on the probability that any estimator recovers a planted matching exactly.

For an n x (n+s) planted instance with mean gap mu and a split point gamma in
[0, 1],

    Pr[success] <= Σ_k C(n,k)·s!/(k+s)!·Φ((1-γ)μ)^(n-k)·Φ(γμ)^(k(k+s))·e^(k(2γ-1)μ²/2)

where Φ is the standard normal CDF. The bound holds for every gamma; it is
minimized over a grid. Terms are evaluated in log-space.
"""
import logging
import math

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import norm

from src.errors import DomainError

logger = logging.getLogger(__name__)

GAMMA_GRID_POINTS = 101


def _check_arguments(n, s, mu):
    if n < 1 or s < 0:
        logger.error(f"Covering bound needs n >= 1 and s >= 0, got n={n}, s={s}.")
        raise DomainError(f"Need n >= 1 and s >= 0, got n={n}, s={s}.")
    if not mu > 0:
        logger.error(f"Covering bound needs mu > 0, got {mu}.")
        raise DomainError(f"mu must be > 0, got {mu}.")


def log_map_success_terms(n, s, mu, gamma):
    """Log of every term k = 0..n of the covering sum at one gamma."""
    _check_arguments(n, s, mu)
    k = np.arange(n + 1, dtype=float)
    log_binomial = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    log_ratio = gammaln(s + 1) - gammaln(k + s + 1)
    log_cover_true = norm.logcdf((1.0 - gamma) * mu)
    log_cover_false = norm.logcdf(gamma * mu)
    # 0 * log(...) must stay 0 when a CDF underflows to zero
    true_part = np.where(n - k > 0, (n - k) * log_cover_true, 0.0)
    false_part = np.where(k > 0, k * (k + s) * log_cover_false, 0.0)
    return log_binomial + log_ratio + true_part + false_part + k * (2.0 * gamma - 1.0) * mu ** 2 / 2.0


def log_map_success_sum(n, s, mu, gamma):
    return float(logsumexp(log_map_success_terms(n, s, mu, gamma)))


def analytic_gamma_candidates(n, s, mu):
    """
    Split points from the covering argument, kept when real-valued and within [0, 1].

    gamma = (1 + sqrt(1/a - 1))/2 with a = μ²/(4 log n), and
    gamma = sqrt(2 log(s)/μ²), the log-scale excess of the larger side.
    """
    _check_arguments(n, s, mu)
    candidates = []
    if n >= 2:
        a = mu ** 2 / (4.0 * math.log(n))
        if 0 < a <= 1:
            candidates.append((1.0 + math.sqrt(1.0 / a - 1.0)) / 2.0)
    if s >= 1:
        candidates.append(math.sqrt(2.0 * math.log(s) / mu ** 2))
    return [g for g in candidates if 0.0 <= g <= 1.0]


def map_success_upper_bound(n, s, mu, gamma_grid=None):
    """
    Minimum over gamma of the covering bound, clamped to [0, 1].

    Args:
        n (int): size of the smaller side.
        s (int): excess of the larger side.
        mu (float): planted mean gap.
        gamma_grid (Iterable[float] | None): split points to try; defaults to
            GAMMA_GRID_POINTS evenly spaced points. The analytic candidates are
            always added.
    """
    _check_arguments(n, s, mu)
    grid = np.linspace(0.0, 1.0, GAMMA_GRID_POINTS) if gamma_grid is None else np.asarray(list(gamma_grid), dtype=float)
    if np.any((grid < 0) | (grid > 1)):
        raise DomainError("Every gamma must lie in [0, 1].")
    gammas = np.concatenate([grid, analytic_gamma_candidates(n, s, mu)])

    values = np.array([log_map_success_sum(n, s, mu, g) for g in gammas])
    best = int(np.argmin(values))
    logger.debug(f"Covering bound n={n}, s={s}, mu={mu:.4f}: gamma*={gammas[best]:.4f}, log bound={values[best]:.4f}")
    return float(min(1.0, math.exp(min(values[best], 0.0))))
