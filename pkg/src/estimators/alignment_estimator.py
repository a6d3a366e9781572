import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from src.errors import DomainError, ShapeError, TooLarge

logger = logging.getLogger(__name__)

ML = 'ml'
MAX_ROW = 'max-row'
THRESHOLD = 'threshold'

BRUTE_FORCE_MAX_U = 8
BRUTE_FORCE_MAX_V = 10
_PERMUTATION_CHUNK = 100_000


@dataclass(frozen=True)
class AlignmentEstimate:
    """
    Output of an estimator.

    ml: injective, one v per u. max-row: one v per u, v may repeat.
    threshold: an arbitrary relation.
    """
    kind: str
    pairs: tuple
    objective: float

    def __post_init__(self):
        object.__setattr__(self, 'pairs', tuple(sorted((int(u), int(v)) for u, v in self.pairs)))

    def as_set(self):
        return set(self.pairs)

    def as_dict(self):
        """u -> v; only meaningful for the ml and max-row kinds."""
        return dict(self.pairs)


def _as_array(scores):
    s = getattr(scores, 's', scores)
    s = np.atleast_2d(np.asarray(s, dtype=float))
    if s.ndim != 2:
        raise ShapeError(f"Score matrix must be 2-D, got shape {s.shape}.")
    return s


def default_threshold(n_u, n_v, size):
    """τ = log(n_u·n_v/size), the choice balancing false positives against false negatives."""
    if size < 1 or n_u < 1 or n_v < 1:
        logger.error(f"default_threshold needs positive sizes, got n_u={n_u}, n_v={n_v}, size={size}.")
        raise DomainError("n_u, n_v and size must all be >= 1.")
    return math.log(n_u) + math.log(n_v) - math.log(size)


class AlignmentEstimator:
    """
    Base class for estimators operating on a score matrix.
    """
    kind = None

    def __init__(self):
        logger.debug(f"{type(self).__name__} initialized.")

    def estimate(self, scores):
        """
        Estimates the alignment from a score matrix.

        Args:
            scores (ScoreMatrix | np.ndarray): n_u x n_v scores.

        Returns:
            AlignmentEstimate

        Raises:
            NotImplementedError: This method must be implemented by subclasses.
        """
        logger.error("estimate() called on base AlignmentEstimator class. Subclasses must implement it.")
        raise NotImplementedError("This method must be implemented by subclasses.")


def _tie_tolerance(s0):
    return 1e-12 * max(1.0, s0.shape[0] * float(np.max(np.abs(s0))))


def _column_potentials(cost, cols, tol):
    """
    Column duals v <= 0 of a min-cost assignment rows -> cols, as shortest
    distances over the column exchange graph (Bellman-Ford). Free columns
    stay at 0 because the assignment is optimal.
    """
    n_u, n_v = cost.shape
    step = cost - cost[np.arange(n_u), cols][:, None]
    v = np.zeros(n_v)
    for _ in range(n_v + 1):
        updated = np.minimum(v, np.min(v[cols][:, None] + step, axis=0))
        if np.all(v - updated <= tol):
            return updated
        v = updated
    return v


def _lexicographic_optimum(s0, cols, tol):
    """
    Moves an optimal assignment to the lexicographically smallest optimal one.

    Row by row, the smallest column that still admits an optimal completion is
    fixed. Only columns with zero reduced cost can be part of any optimum, so
    re-solves happen only where ties actually exist.
    """
    n_u, n_v = s0.shape
    cost = -s0
    v = _column_potentials(cost, cols, tol)
    u = cost[np.arange(n_u), cols] - v[cols]
    reduced = cost - u[:, None] - v[None, :]
    best = float(s0[np.arange(n_u), cols].sum())

    cols = cols.copy()
    taken = np.zeros(n_v, dtype=bool)
    fixed = 0.0
    for row in range(n_u):
        for col in np.flatnonzero(reduced[row, :cols[row]] <= 8 * tol):
            if taken[col]:
                continue
            rest = np.arange(row + 1, n_u)
            free = np.flatnonzero(~taken)
            free = free[free != col]
            completion = 0.0
            if rest.size:
                sub = s0[np.ix_(rest, free)]
                r, c = linear_sum_assignment(sub, maximize=True)
                completion = float(sub[r, c].sum())
            if fixed + s0[row, col] + completion >= best - tol:
                if rest.size:
                    cols[rest[r]] = free[c]
                cols[row] = col
                break
        taken[cols[row]] = True
        fixed += s0[row, cols[row]]
    return cols


class MaxLikelihoodEstimator(AlignmentEstimator):
    """
    Maximum-weight injective map of every left user, i.e. the rectangular linear
    assignment problem. Solved natively on n_u x n_v without padding.
    """
    kind = ML

    def __init__(self, size=None):
        super().__init__()
        self.size = size

    def estimate(self, scores):
        s = _as_array(scores)
        n_u, n_v = s.shape
        if n_u > n_v:
            logger.error(f"Maximum likelihood needs n_u <= n_v, got {n_u}x{n_v}.")
            raise ShapeError(f"n_u ({n_u}) must not exceed n_v ({n_v}).")
        if self.size is not None and self.size != n_u:
            logger.error(f"Maximum likelihood is defined for |M| = n_u, got size={self.size}, n_u={n_u}.")
            raise ShapeError(f"size ({self.size}) must equal n_u ({n_u}).")
        if not n_u:
            return AlignmentEstimate(ML, (), 0.0)
        # s and s + c reach the solver as the same matrix
        s0 = s - np.max(s)
        tol = _tie_tolerance(s0)
        rows, cols = linear_sum_assignment(s0, maximize=True)
        cols = _lexicographic_optimum(s0, cols, tol)
        objective = float(np.sum(s[rows, cols]))
        logger.debug(f"ML assignment on {n_u}x{n_v}: objective {objective:.6f}")
        return AlignmentEstimate(ML, tuple(zip(rows.tolist(), cols.tolist())), objective)


class MaxRowEstimator(AlignmentEstimator):
    """Pairs each u with its best v independently of all other users."""
    kind = MAX_ROW

    def estimate(self, scores):
        s = _as_array(scores)
        if s.shape[0] and not s.shape[1]:
            raise ShapeError("Cannot pick a row maximum with zero columns.")
        if not s.shape[0]:
            return AlignmentEstimate(MAX_ROW, (), 0.0)
        cols = np.argmax(s, axis=1)  # first maximum -> smallest v
        rows = np.arange(s.shape[0])
        return AlignmentEstimate(MAX_ROW, tuple(zip(rows.tolist(), cols.tolist())), float(np.sum(s[rows, cols])))


class ThresholdEstimator(AlignmentEstimator):
    """
    Keeps every pair whose score is strictly above tau.

    With tau=None the default threshold log(n_u·n_v/|M|) is used with |M| = n_u.
    """
    kind = THRESHOLD

    def __init__(self, tau=None):
        super().__init__()
        self.tau = tau

    def estimate(self, scores):
        s = _as_array(scores)
        tau = self.tau if self.tau is not None else default_threshold(s.shape[0], s.shape[1], s.shape[0])
        rows, cols = np.nonzero(s > tau)
        return AlignmentEstimate(THRESHOLD, tuple(zip(rows.tolist(), cols.tolist())), float(np.sum(s[rows, cols])))


class BruteForceEstimator(AlignmentEstimator):
    """Exhaustive maximum likelihood over all injective maps. Small instances only."""
    kind = ML

    def __init__(self, size=None):
        super().__init__()
        self.size = size

    def estimate(self, scores):
        s = _as_array(scores)
        n_u, n_v = s.shape
        if n_u > BRUTE_FORCE_MAX_U or n_v > BRUTE_FORCE_MAX_V:
            logger.error(f"Brute force refused for {n_u}x{n_v} (limit {BRUTE_FORCE_MAX_U}x{BRUTE_FORCE_MAX_V}).")
            raise TooLarge(f"Brute force limited to n_u <= {BRUTE_FORCE_MAX_U} and n_v <= {BRUTE_FORCE_MAX_V}.")
        if n_u > n_v:
            raise ShapeError(f"n_u ({n_u}) must not exceed n_v ({n_v}).")
        if self.size is not None and self.size != n_u:
            raise ShapeError(f"size ({self.size}) must equal n_u ({n_u}).")

        if not n_u:
            return AlignmentEstimate(ML, (), 0.0)

        rows = np.arange(n_u)
        best_value, best_perm = -np.inf, None
        # permutations come in lexicographic order and argmax keeps the first maximum
        permutations = itertools.permutations(range(n_v), n_u)
        while True:
            chunk = np.array(list(itertools.islice(permutations, _PERMUTATION_CHUNK)), dtype=np.intp)
            if not chunk.size:
                break
            chunk = chunk.reshape(-1, n_u)
            values = s[rows, chunk].sum(axis=1)
            i = int(np.argmax(values))
            if values[i] > best_value:
                best_value, best_perm = float(values[i]), chunk[i]
        return AlignmentEstimate(ML, tuple(zip(rows.tolist(), best_perm.tolist())), best_value)


def max_likelihood(s, size=None):
    return MaxLikelihoodEstimator(size).estimate(s)


def max_row(s):
    return MaxRowEstimator().estimate(s)


def threshold_test(s, tau):
    return ThresholdEstimator(tau).estimate(s)


def brute_force_ml(s, size=None):
    return BruteForceEstimator(size).estimate(s)


def get_estimator(name, tau=None):
    """Builds the estimator registered under `name` ('ml', 'max-row' or 'threshold')."""
    if name == ML:
        return MaxLikelihoodEstimator()
    if name == MAX_ROW:
        return MaxRowEstimator()
    if name == THRESHOLD:
        return ThresholdEstimator(tau)
    logger.error(f"Unknown estimator '{name}'.")
    raise ValueError(f"Unknown estimator '{name}'; choose from {(ML, MAX_ROW, THRESHOLD)}.")
