"""
Concentration bounds on the score of a candidate mapping.

Planted bounds are stated on the shifted score W_G = μW - μ²/2, whose signal
strength is ζ = μ²/2. Database bounds are the same expressions with ζ replaced
by I_XY, plus a ρ_max correction on the misalignment-despite-typicality event.

Event kinds:
    atypicality        a true partial mapping scores at most τ per pair
    false-positive     a single false pair scores at least τ
    misalignment       a wrong mapping scores at least as much as the truth
    cond-misalignment  the truth is typical and still loses to a disjoint mapping
"""
import logging
import math

from src.errors import DomainError

logger = logging.getLogger(__name__)

ATYPICALITY = 'atypicality'
FALSE_POSITIVE = 'false-positive'
MISALIGNMENT = 'misalignment'
COND_MISALIGNMENT = 'cond-misalignment'
TAIL_KINDS = (ATYPICALITY, FALSE_POSITIVE, MISALIGNMENT, COND_MISALIGNMENT)


def tau_w_to_g(mu, tau_w):
    """Threshold on raw planted weights expressed on the shifted score."""
    return mu * tau_w - 0.5 * mu ** 2


def tau_g_to_w(mu, tau_g):
    return (tau_g + 0.5 * mu ** 2) / mu


def _log_bound(kind, zeta, tau, delta):
    if kind not in TAIL_KINDS:
        logger.error(f"Unknown tail bound kind '{kind}'.")
        raise DomainError(f"kind must be one of {TAIL_KINDS}, got '{kind}'.")
    if not zeta > 0:
        logger.error(f"Signal strength must be positive, got {zeta}.")
        raise DomainError(f"zeta must be > 0, got {zeta}.")
    if delta < 1:
        raise DomainError(f"delta must be >= 1, got {delta}.")

    if kind == ATYPICALITY:
        if tau > zeta:
            raise DomainError(f"atypicality needs tau <= {zeta}, got {tau}.")
        return -delta * (zeta - tau) ** 2 / (4.0 * zeta)
    if kind == FALSE_POSITIVE:
        if tau < -zeta:
            raise DomainError(f"false-positive needs tau >= {-zeta}, got {tau}.")
        # a single pair; delta does not enter
        return -(zeta + tau) ** 2 / (4.0 * zeta)
    if kind == MISALIGNMENT:
        return -delta * zeta / 2.0
    if tau < 0:
        raise DomainError(f"cond-misalignment needs tau >= 0, got {tau}.")
    return -delta * (tau ** 2 + zeta ** 2) / (2.0 * zeta)


def planted_tail_bound(kind, zeta, tau_g=0.0, delta=1):
    """
    Upper bound on the probability of a planted-matching event.

    Args:
        kind (str): one of TAIL_KINDS.
        zeta (float): μ²/2.
        tau_g (float): per-pair threshold on the shifted score.
        delta (int): size of the partial mapping or of the misalignment.

    Returns:
        float: the bound, in (0, 1].
    """
    return math.exp(_log_bound(kind, zeta, tau_g, delta))


def database_tail_bound(kind, i_xy, rho_max=0.0, tau=0.0, delta=1):
    """Database-alignment counterpart of planted_tail_bound."""
    if kind in (ATYPICALITY, FALSE_POSITIVE) and abs(tau) > i_xy:
        logger.error(f"{kind} bound needs |tau| <= I_XY={i_xy}, got {tau}.")
        raise DomainError(f"|tau| must not exceed I_XY={i_xy}, got {tau}.")
    if kind == COND_MISALIGNMENT and tau > i_xy:
        raise DomainError(f"cond-misalignment needs tau <= I_XY={i_xy}, got {tau}.")
    if not 0 <= rho_max < 1:
        raise DomainError(f"rho_max must be in [0, 1), got {rho_max}.")
    log_bound = _log_bound(kind, i_xy, tau, delta)
    if kind == COND_MISALIGNMENT:
        log_bound += 6.0 * rho_max ** 2 * delta * tau
    return math.exp(min(log_bound, 0.0))
