"""
Generating function R(Θ) = E[exp<G, Θ>] under independent marginals.

For canonical databases with correlation vector rho,

    R(Θ) = Π_i [(1-ρ_i²)^(n_u+n_v-ΣΘ) / det P(Θ, ρ_i)]^(1/2)
    P(Θ, ρ) = (1-ρ²)I + [[ρ² diag(Θ1), -ρΘ], [-ρΘᵀ, ρ² diag(Θᵀ1)]]

and E[exp<G, Θ-M> | M] = R(Θ). Every Chernoff bound on database alignment
events reduces to an evaluation of R.
"""
import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy import linalg

from src.errors import DomainError, NotPositiveDefinite, ShapeError
from src.mismatch import CYCLE, EVEN_PATH
from src.model import mutual_information, validate_rho

logger = logging.getLogger(__name__)

ATYPICALITY = 'atypicality'
MISALIGNMENT = 'misalignment'
COND_MISALIGNMENT = 'cond-misalignment'
CHERNOFF_EVENTS = (ATYPICALITY, MISALIGNMENT, COND_MISALIGNMENT)


@dataclass(frozen=True, eq=False)
class ThetaMatrix:
    """Exponent weights of the generating function, one per (u, v) pair."""
    theta: np.ndarray

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 2:
            raise ShapeError(f"Theta must be a matrix, got shape {theta.shape}.")
        if not np.all(np.isfinite(theta)):
            raise DomainError("Theta has non-finite entries.")
        object.__setattr__(self, 'theta', theta)

    @property
    def n_u(self):
        return self.theta.shape[0]

    @property
    def n_v(self):
        return self.theta.shape[1]


def _as_theta(theta):
    return theta.theta if isinstance(theta, ThetaMatrix) else ThetaMatrix(theta).theta


def _as_matrix(mapping):
    return mapping.to_matrix() if hasattr(mapping, 'to_matrix') else np.asarray(mapping, dtype=float)


def p_matrix(theta, rho):
    """P(Θ, ρ) for a scalar correlation ρ."""
    theta = _as_theta(theta)
    r2 = rho * rho
    upper = np.diag(r2 * theta.sum(axis=1))
    lower = np.diag(r2 * theta.sum(axis=0))
    p = np.block([[upper, -rho * theta], [-rho * theta.T, lower]])
    p[np.diag_indices_from(p)] += 1.0 - r2
    return p


def log_generating_function_R(theta, rho):
    """log R(Θ); raises NotPositiveDefinite when Θ is outside the convergence region."""
    theta = _as_theta(theta)
    rho = validate_rho(rho)
    n_u, n_v = theta.shape
    excess = n_u + n_v - float(theta.sum())
    values, counts = np.unique(rho, return_counts=True)
    total = 0.0
    for value, count in zip(values, counts):
        try:
            factor = linalg.cholesky(p_matrix(theta, float(value)), lower=True)
        except linalg.LinAlgError as e:
            logger.error(f"P(Θ, ρ={value}) is not positive definite; Θ is outside the convergence region.")
            raise NotPositiveDefinite(f"P(Θ, ρ={value}) is not positive definite.") from e
        log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
        total += count * 0.5 * (excess * math.log1p(-value * value) - log_det)
    return total


def generating_function_R(theta, rho):
    return math.exp(log_generating_function_R(theta, rho))


def theta_blocks(theta):
    """
    Splits Θ into the (rows, cols) index sets of its independent blocks.

    Rows and columns joined by a nonzero entry share a block; all-zero rows and
    columns form singleton blocks.
    """
    theta = _as_theta(theta)
    graph = nx.Graph()
    graph.add_nodes_from(('u', i) for i in range(theta.shape[0]))
    graph.add_nodes_from(('v', j) for j in range(theta.shape[1]))
    rows, cols = np.nonzero(theta)
    graph.add_edges_from((('u', int(i)), ('v', int(j))) for i, j in zip(rows, cols))
    blocks = []
    for nodes in nx.connected_components(graph):
        us = sorted(i for side, i in nodes if side == 'u')
        vs = sorted(j for side, j in nodes if side == 'v')
        blocks.append((us, vs))
    blocks.sort(key=lambda b: (b[0][:1] or [math.inf], b[1][:1] or [math.inf]))
    return blocks


def R_block_product_check(theta, rho):
    """
    Evaluates R on the full Θ and as the product over its diagonal blocks.

    Returns:
        tuple[float, float]: (full, product-of-blocks). The two agree for any Θ.
    """
    theta = _as_theta(theta)
    full = log_generating_function_R(theta, rho)
    product = 0.0
    for us, vs in theta_blocks(theta):
        block = theta[np.ix_(us, vs)] if us and vs else np.zeros((len(us), len(vs)))
        if block.size:
            product += log_generating_function_R(block, rho)
    logger.debug(f"log R full={full:.12f}, block product={product:.12f}")
    return math.exp(full), math.exp(product)


def r_one_to_one(theta, rho):
    """R([1-θ]) = Π_i [(1-ρ_i²)^θ / (1-ρ_i²θ²)]^(1/2), valid for |θ|·ρ_max < 1."""
    rho = validate_rho(rho)
    r2 = rho ** 2
    if rho.size and abs(theta) * float(np.max(np.abs(rho))) >= 1.0:
        logger.error(f"r_one_to_one needs |θ|·ρ_max < 1, got θ={theta}.")
        raise NotPositiveDefinite(f"R([1-θ]) diverges for θ={theta}.")
    return math.exp(0.5 * float(np.sum(theta * np.log1p(-r2) - np.log1p(-r2 * theta * theta))))


def r_one_to_one_bound(theta, i_xy):
    """exp(-θ(1-θ)I_XY), an upper bound on R([1-θ]) for θ in [-1, 1]."""
    if not -1.0 <= theta <= 1.0:
        raise DomainError(f"theta must be in [-1, 1], got {theta}.")
    return math.exp(-theta * (1.0 - theta) * i_xy)


def r_mapping(theta, rho, size):
    """R((1-θ)m) for a one-to-one mapping m with `size` pairs."""
    if size < 0:
        raise DomainError(f"size must be >= 0, got {size}.")
    return r_one_to_one(theta, rho) ** size


def cycle_theta(n, nu, theta=0.5):
    """n x n block ν(θ·m1 + (1-θ)·m2) of a cycle, m1 the diagonal and m2 the shifted diagonal."""
    if n < 2:
        raise DomainError(f"A cycle needs at least 2 pairs per mapping, got {n}.")
    m1 = np.eye(n)
    m2 = np.roll(np.eye(n), 1, axis=1)
    return nu * (theta * m1 + (1.0 - theta) * m2)


def even_path_theta(n, nu, theta=0.5):
    """n x (n+1) block ν(θ·m1 + (1-θ)·m2) of an even path with n pairs per mapping."""
    if n < 1:
        raise DomainError(f"An even path needs at least 1 pair per mapping, got {n}.")
    m1 = np.eye(n, n + 1)
    m2 = np.eye(n, n + 1, k=1)
    return nu * (theta * m1 + (1.0 - theta) * m2)


def elementary_block_R_bound(kind, n_block, nu, i_xy, rho_max):
    """
    Upper bound on log R for the block ν/2·(m1 + m2) of an elementary misalignment.

    cycle (ν in [0, 2]):     I_XY·(-(n/2)ν(2-ν) + n·ρ_max²(ν-1))
    even-path (ν in [1, 2]): I_XY·(-(n/2)ν(2-ν) + 6n·ρ_max²(ν-1))
    """
    if kind == CYCLE:
        if not 0.0 <= nu <= 2.0:
            raise DomainError(f"cycle bound needs nu in [0, 2], got {nu}.")
        if n_block < 2:
            raise DomainError(f"A cycle needs at least 2 pairs per mapping, got {n_block}.")
        correction = n_block * rho_max ** 2 * (nu - 1.0)
    elif kind == EVEN_PATH:
        if not 1.0 <= nu <= 2.0:
            raise DomainError(f"even-path bound needs nu in [1, 2], got {nu}.")
        if n_block < 1:
            raise DomainError(f"An even path needs at least 1 pair per mapping, got {n_block}.")
        # the sharper -(ν-1)²ν² term does not hold for small blocks; see DESIGN.md
        correction = 6.0 * n_block * rho_max ** 2 * (nu - 1.0)
    else:
        logger.error(f"Unknown elementary block kind '{kind}'.")
        raise DomainError(f"kind must be '{CYCLE}' or '{EVEN_PATH}', got '{kind}'.")
    return i_xy * (-0.5 * n_block * nu * (2.0 - nu) + correction)


def chernoff_event_bound(event, m1, m2=None, theta=0.5, nu=1.0, tau=0.0, *, rho):
    """
    Chernoff bound on an alignment event, evaluated through R.

    atypicality:        exp(θτ|m1|)·R((1-θ)m1)
    misalignment:       R((1-θ)m1 + θm2)
    cond-misalignment:  exp(-τ|m1|(ν-1))·R(ν(1-θ)m1 + νθm2)

    m1 is the true (partial) mapping, m2 the competing one; both may be
    PartialMapping instances or 0/1 matrices of the same shape.
    """
    if event not in CHERNOFF_EVENTS:
        logger.error(f"Unknown Chernoff event '{event}'.")
        raise DomainError(f"event must be one of {CHERNOFF_EVENTS}, got '{event}'.")
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}.")
    a = _as_matrix(m1)
    size = float(a.sum())

    if event == ATYPICALITY:
        return math.exp(theta * tau * size + log_generating_function_R((1.0 - theta) * a, rho))

    if m2 is None:
        raise DomainError(f"{event} needs the competing mapping m2.")
    b = _as_matrix(m2)
    if a.shape != b.shape:
        raise ShapeError(f"m1 and m2 have shapes {a.shape} and {b.shape}.")
    if event == MISALIGNMENT:
        return math.exp(log_generating_function_R((1.0 - theta) * a + theta * b, rho))
    if not nu > 1:
        raise DomainError(f"cond-misalignment needs nu > 1, got {nu}.")
    log_r = log_generating_function_R(nu * (1.0 - theta) * a + nu * theta * b, rho)
    return math.exp(-tau * size * (nu - 1.0) + log_r)


def optimal_cond_parameters(i_xy, tau):
    """θ = 1/2 and ν = 1 + τ/I_XY, the choice that yields the database cond-misalignment bound."""
    if not i_xy > 0:
        raise DomainError(f"I_XY must be > 0, got {i_xy}.")
    return 0.5, 1.0 + tau / i_xy


def block_bound_margin(kind, n_block, nu, rho):
    """Gap between the elementary block bound and the direct log R evaluation (>= 0 when the bound holds)."""
    rho = validate_rho(rho)
    theta = cycle_theta(n_block, nu) if kind == CYCLE else even_path_theta(n_block, nu)
    rho_max = float(np.max(np.abs(rho))) if rho.size else 0.0
    bound = elementary_block_R_bound(kind, n_block, nu, mutual_information(rho), rho_max)
    margin = bound - log_generating_function_R(theta, rho)
    logger.debug(f"{kind} n={n_block} nu={nu}: log R bound margin {margin:.3e}")
    return margin
