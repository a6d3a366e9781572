"""
Phase boundaries in the (beta, x) plane, where x = zeta / log n.

A curve gives, for every error exponent beta, the signal strength x above
which an algorithm makes at most n^(1-beta) errors. Curves are stored as
segments, each carrying a closed-form label and the coefficient function that
is valid on its beta interval.
"""
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import pandas as pd

from src.errors import DomainError, IoError
from src.estimators.alignment_estimator import MAX_ROW, ML, THRESHOLD

logger = logging.getLogger(__name__)

ALGORITHMS = (ML, MAX_ROW, THRESHOLD)

EXACT = 'exact'
ALMOST_EXACT = 'almost-exact'
ERROR_EXPONENT = 'error-exponent'
CONVERSE = 'converse'
CURVE_KINDS = (EXACT, ALMOST_EXACT, ERROR_EXPONENT, CONVERSE)

EQUAL = 'equal'
SUBLINEAR_EXCESS = 'sublinear-excess'
LINEAR_EXCESS = 'linear-excess'

ELLIPTIC = 'elliptic'
PARABOLIC = 'parabolic'
VERTICAL = 'vertical'
LINEAR = 'linear'

# additive constants of the vertical segments, in nats
BALANCED_VERTICAL_OFFSET = 2.0 * math.log((math.sqrt(5.0) - 1.0) / 2.0)
UNBALANCED_VERTICAL_OFFSET = 2.0 * math.log((3.0 + math.sqrt(5.0)) / 2.0)

CURVE_COLUMNS = ['algorithm', 'kind', 'regime', 'beta', 'x', 'segment', 'offset_nats']


@dataclass(frozen=True)
class Regime:
    """
    Relative size of the two user sets.

    alpha=None means |V| = n. Otherwise |V| - n = n^alpha.
    """
    alpha: float = None

    def __post_init__(self):
        if self.alpha is not None:
            if not math.isfinite(self.alpha) or self.alpha < 0:
                logger.error(f"Regime alpha must be a finite value >= 0, got {self.alpha}.")
                raise DomainError(f"alpha must be >= 0, got {self.alpha}.")
            object.__setattr__(self, 'alpha', float(self.alpha))

    @classmethod
    def balanced_regime(cls):
        return cls(None)

    @classmethod
    def from_sizes(cls, n, n_v):
        if n < 1 or n_v < n:
            logger.error(f"Regime.from_sizes needs 1 <= n <= n_v, got n={n}, n_v={n_v}.")
            raise DomainError(f"Need 1 <= n <= n_v, got n={n}, n_v={n_v}.")
        if n_v == n:
            return cls(None)
        if n < 2:
            raise DomainError("alpha = log(n_v - n)/log n is undefined for n = 1.")
        return cls(math.log(n_v - n) / math.log(n))

    @property
    def balanced(self):
        return self.alpha is None

    @property
    def alpha_value(self):
        return 0.0 if self.alpha is None else self.alpha

    @property
    def nu(self):
        return 1.0 if self.alpha is None else max(self.alpha, 1.0)

    @property
    def size_class(self):
        if self.alpha is None:
            return EQUAL
        return SUBLINEAR_EXCESS if self.alpha < 1.0 else LINEAR_EXCESS

    @property
    def label(self):
        return 'balanced' if self.alpha is None else f'alpha={self.alpha:g}'


@dataclass(frozen=True)
class CurveSegment:
    """Piece of a boundary valid for beta_lo < beta <= beta_hi."""
    beta_lo: float
    beta_hi: float
    label: str
    coefficient: Callable[[float], float] = field(compare=False)
    offset_nats: float = 0.0

    def contains(self, beta):
        return self.beta_lo < beta <= self.beta_hi


class BoundaryValue(NamedTuple):
    x: float
    segment: str
    offset_nats: float = 0.0


class CurvePoint(NamedTuple):
    beta: float
    x: float
    segment: str
    offset_nats: float = 0.0


@dataclass(frozen=True)
class BoundaryCurve:
    algorithm: str
    kind: str
    regime: Regime
    segments: tuple = ()
    points: tuple = ()

    def rows(self):
        return [
            {
                'algorithm': self.algorithm,
                'kind': self.kind,
                'regime': self.regime.label,
                'beta': p.beta,
                'x': p.x,
                'segment': p.segment,
                'offset_nats': p.offset_nats,
            }
            for p in self.points
        ]


def _check_algorithm(algorithm):
    if algorithm not in ALGORITHMS:
        logger.error(f"Unknown algorithm '{algorithm}'.")
        raise DomainError(f"algorithm must be one of {ALGORITHMS}, got '{algorithm}'.")


def _elliptic(beta):
    return 1.0 + 2.0 * math.sqrt(beta * (1.0 - beta))


def _parabolic(alpha):
    return lambda beta: (math.sqrt(alpha) + math.sqrt(beta)) ** 2


def achievability_segments(algorithm, regime):
    """Segments of the error-exponent boundary, ordered by beta."""
    _check_algorithm(algorithm)
    nu = regime.nu
    if algorithm == THRESHOLD:
        return (CurveSegment(0.0, math.inf, PARABOLIC, lambda b: (math.sqrt(nu + b) + math.sqrt(b)) ** 2),)
    if algorithm == MAX_ROW:
        return (
            CurveSegment(0.0, nu, PARABOLIC, _parabolic(nu)),
            CurveSegment(nu, math.inf, LINEAR, lambda b: 2.0 * (nu + b)),
        )

    if regime.balanced:
        return (
            CurveSegment(0.0, 0.5, ELLIPTIC, _elliptic),
            CurveSegment(0.5, 1.0, VERTICAL, lambda b: 2.0, BALANCED_VERTICAL_OFFSET),
            CurveSegment(1.0, math.inf, LINEAR, lambda b: 1.0 + b),
        )

    alpha = regime.alpha
    segments = []
    elliptic_hi = min(1.0 - alpha, 0.5)
    if elliptic_hi > 0:
        segments.append(CurveSegment(0.0, elliptic_hi, ELLIPTIC, _elliptic))
    if alpha > 1.0 - alpha:
        segments.append(CurveSegment(max(0.0, 1.0 - alpha), alpha, PARABOLIC, _parabolic(alpha)))
    if 1.0 - alpha > 0.5:
        segments.append(CurveSegment(0.5, 1.0 - alpha, VERTICAL, lambda b: 2.0, UNBALANCED_VERTICAL_OFFSET))
    segments.append(CurveSegment(max(alpha, 1.0 - alpha), math.inf, LINEAR, lambda b: 2.0 * (alpha + b)))
    return tuple(segments)


def achievability_boundary(algorithm, regime, beta):
    """
    Signal strength x = zeta/log n sufficient for at most n^(1-beta) errors.

    Returns:
        BoundaryValue: the x value, the label of the segment it came from and
        the additive constant (nats) carried by vertical segments.
    """
    if not beta > 0 or not math.isfinite(beta):
        logger.error(f"Error exponent beta must be positive and finite, got {beta}.")
        raise DomainError(f"beta must be > 0, got {beta}.")
    for segment in achievability_segments(algorithm, regime):
        if segment.contains(beta):
            return BoundaryValue(float(segment.coefficient(beta)), segment.label, segment.offset_nats)
    raise DomainError(f"No segment of the {algorithm} boundary covers beta={beta}.")


def exact_threshold_coefficient(algorithm, regime):
    """c such that zeta >= c·log n + ω(1) gives exact alignment."""
    _check_algorithm(algorithm)
    if algorithm == THRESHOLD:
        return (1.0 + math.sqrt(1.0 + regime.nu)) ** 2
    if regime.size_class == LINEAR_EXCESS:
        return (1.0 + math.sqrt(regime.alpha)) ** 2
    if algorithm == MAX_ROW:
        return 4.0
    return 2.0 if regime.balanced else 2.0 * (regime.alpha + 1.0)


def almost_exact_threshold(regime):
    return regime.nu


def converse_boundary(regime, beta):
    """Necessary signal strength for fewer than n^(1-beta) errors, 0 < beta <= 1."""
    if not 0 < beta <= 1:
        logger.error(f"Converse boundary is defined for 0 < beta <= 1, got {beta}.")
        raise DomainError(f"beta must be in (0, 1], got {beta}.")
    candidates = [_parabolic(regime.alpha_value)(beta)]
    if beta <= 0.5:
        candidates.append(_elliptic(beta))
    if beta >= 0.5:
        candidates.append(2.0)
    return float(max(candidates))


def boundary_curve(algorithm, regime, kind=ERROR_EXPONENT, betas=None):
    """
    Samples a boundary on a beta grid.

    exact curves are the single point beta=1, almost-exact curves the point
    beta=0. Converse samples outside (0, 1] are dropped.
    """
    _check_algorithm(algorithm)
    if kind not in CURVE_KINDS:
        logger.error(f"Unknown curve kind '{kind}'.")
        raise DomainError(f"kind must be one of {CURVE_KINDS}, got '{kind}'.")
    if betas is None:
        betas = np.linspace(0.01, 2.0, 200)

    if kind == EXACT:
        points = (CurvePoint(1.0, exact_threshold_coefficient(algorithm, regime), EXACT),)
        return BoundaryCurve(algorithm, kind, regime, (), points)
    if kind == ALMOST_EXACT:
        points = (CurvePoint(0.0, almost_exact_threshold(regime), ALMOST_EXACT),)
        return BoundaryCurve(algorithm, kind, regime, (), points)
    if kind == CONVERSE:
        points = tuple(
            CurvePoint(float(b), converse_boundary(regime, float(b)), CONVERSE)
            for b in betas if 0 < b <= 1
        )
        return BoundaryCurve(algorithm, kind, regime, (), points)

    points = []
    for b in betas:
        value = achievability_boundary(algorithm, regime, float(b))
        points.append(CurvePoint(float(b), value.x, value.segment, value.offset_nats))
    logger.debug(f"Sampled {len(points)} points of the {algorithm} boundary ({regime.label}).")
    return BoundaryCurve(algorithm, kind, regime, achievability_segments(algorithm, regime), tuple(points))


def curves_frame(curves):
    rows = [row for curve in curves for row in curve.rows()]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def export_curves(curves, path):
    """Writes sampled curves as CSV polylines. Returns the path written."""
    df = curves_frame(curves)
    if df.empty:
        logger.warning("No curve points to export; writing header only.")
    try:
        directory = os.path.dirname(str(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        df.to_csv(path, index=False)
    except OSError as e:
        logger.error(f"Error saving curves to {path}: {e}", exc_info=True)
        raise IoError(f"Could not write {path}: {e}") from e
    logger.info(f"{len(df)} curve points saved to {path}")
    return path
