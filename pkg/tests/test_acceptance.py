"""End-to-end checks of the simulator against its theoretical guarantees."""
import math

import numpy as np
import pytest

from src.estimators import brute_force_ml, max_likelihood
from src.experiment_runner import ExperimentConfig, run_sweep, solve_mu
from src.model import CorrelationModel, canonicalize, mutual_information, score_moments
from src.results_writer import aggregate, emit
from src.synth import PartialMapping, sample_database_pair, sample_raw_pair
from src.theory.covering import map_success_upper_bound
from src.theory.generating_function import generating_function_R
from src.theory.tail_bounds import (
    ATYPICALITY,
    COND_MISALIGNMENT,
    FALSE_POSITIVE,
    MISALIGNMENT,
    planted_tail_bound,
)


def _pair_density(a, b, rho):
    """Information density of row-aligned pairs (a[i], b[i])."""
    r2 = rho ** 2
    return mutual_information(rho) - ((r2 * (a ** 2 + b ** 2) - 2 * rho * a * b) / (2 * (1 - r2))).sum(axis=1)


def _by_key(records):
    out = {}
    for r in records:
        out.setdefault((r.x, r.algorithm), []).append(r)
    return out


def test_csv_identical_across_worker_counts(tmp_path):
    base = dict(mode='planted', n=10, x_grid=(0.8, 1.6), trials=4, master_seed=3)
    serial = emit(aggregate(run_sweep(ExperimentConfig(**base, workers=1))), [], str(tmp_path / "serial.csv"))
    parallel = emit(aggregate(run_sweep(ExperimentConfig(**base, workers=3))), [], str(tmp_path / "parallel.csv"))
    with open(serial, 'rb') as a, open(parallel, 'rb') as b:
        assert a.read() == b.read()


@pytest.mark.slow
def test_ml_matches_brute_force_on_many_instances():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        n_u = int(rng.integers(1, 8))
        n_v = int(rng.integers(n_u, 10))
        s = rng.standard_normal((n_u, n_v))
        assert abs(max_likelihood(s).objective - brute_force_ml(s).objective) <= 1e-9


@pytest.mark.slow
def test_canonical_samples_are_whitened():
    rng = np.random.default_rng(8)
    for _ in range(50):
        d_a, d_b = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        factor = rng.standard_normal((d_a + d_b, d_a + d_b + 3))
        joint = factor @ factor.T / (d_a + d_b + 3) + 0.2 * np.eye(d_a + d_b)
        model = CorrelationModel(rng.standard_normal(d_a), rng.standard_normal(d_b),
                                 joint[:d_a, :d_a], joint[d_a:, d_a:], joint[:d_a, d_a:])
        canonical, transforms = canonicalize(model)
        a_raw, b_raw = sample_raw_pair(model, 100_000, rng)
        d = canonical.dims
        cov = np.atleast_2d(np.cov(np.hstack([transforms.apply_a(a_raw), transforms.apply_b(b_raw)]).T))
        np.testing.assert_allclose(cov[:d, :d], np.eye(d), atol=0.02)
        np.testing.assert_allclose(cov[d:, d:], np.eye(d), atol=0.02)
        np.testing.assert_allclose(cov[:d, d:], np.diag(canonical.rho), atol=0.02)


@pytest.mark.slow
def test_information_density_moments():
    rho = np.full(20, 0.2)
    samples = 100_000
    db = sample_database_pair(rho, PartialMapping.identity(samples), samples, samples, 21)
    true = _pair_density(db.a, db.b, rho)
    false = _pair_density(db.a, np.roll(db.b, 1, axis=0), rho)
    moments = score_moments(rho)
    for values, mean, var in ((true, moments.true_mean, moments.true_var),
                              (false, moments.false_mean, moments.false_var)):
        m, v = values.mean(), values.var()
        assert abs(m - mean) <= 4 * math.sqrt(v / samples)
        se_var = math.sqrt(np.mean((values - m) ** 4) - v ** 2) / math.sqrt(samples)
        assert abs(v - var) <= 4 * se_var


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.1, 0.3])
def test_two_cycle_generating_function_monte_carlo(theta):
    rho, samples = np.array([0.3]), 1_000_000
    db = sample_database_pair(rho, PartialMapping.identity(2 * samples), 2 * samples, 2 * samples, 5)
    a = db.a.reshape(samples, 2)
    b = db.b.reshape(samples, 2)
    g = {}
    for u in range(2):
        for v in range(2):
            g[u, v] = _pair_density(a[:, [u]], b[:, [v]], rho)
    # <G, Θ - M> with Θ = θ on every entry of the 2 x 2 block and M the identity
    exponent = theta * sum(g.values()) - g[0, 0] - g[1, 1]
    empirical = float(np.mean(np.exp(exponent)))
    assert empirical == pytest.approx(generating_function_R(np.full((2, 2), theta), rho), rel=0.05)


def _binomial_slack(p, trials):
    return 4 * math.sqrt(max(p * (1 - p), 1e-12) / trials)


@pytest.mark.slow
@pytest.mark.parametrize("zeta", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("tau_fraction", [0.0, 0.5])
def test_planted_event_frequencies_below_bounds(zeta, tau_fraction):
    trials = 100_000
    tau = tau_fraction * zeta
    mu = math.sqrt(2 * zeta)
    rng = np.random.default_rng(int(zeta * 10 + tau_fraction * 100))

    def shifted(mean, size):
        return mu * (rng.standard_normal(size) + mean) - mu ** 2 / 2

    checks = []
    true_pairs = shifted(mu, (trials, 2))
    false_pairs = shifted(0.0, (trials, 2))
    checks.append((np.mean(true_pairs[:, 0] <= tau), planted_tail_bound(ATYPICALITY, zeta, tau)))
    checks.append((np.mean(false_pairs[:, 0] >= tau), planted_tail_bound(FALSE_POSITIVE, zeta, tau)))
    for delta in (1, 2):
        wins = false_pairs[:, :delta].sum(axis=1) >= true_pairs[:, :delta].sum(axis=1)
        checks.append((np.mean(wins), planted_tail_bound(MISALIGNMENT, zeta, delta=delta)))
    typical_loss = (true_pairs[:, 0] >= tau) & (false_pairs[:, 0] >= true_pairs[:, 0])
    checks.append((np.mean(typical_loss), planted_tail_bound(COND_MISALIGNMENT, zeta, tau)))

    for frequency, bound in checks:
        assert frequency <= bound + _binomial_slack(bound, trials)


@pytest.mark.slow
def test_balanced_planted_phase_behavior():
    cfg = ExperimentConfig(mode='planted', n=500, x_grid=(0.8, 1.5, 2.5), trials=50, master_seed=1,
                           algorithms=('ml', 'threshold'))
    groups = _by_key(run_sweep(cfg))
    fraction = {key: np.mean([r.errors for r in rs]) / cfg.n for key, rs in groups.items()}
    assert fraction[0.8, 'ml'] >= 0.10
    assert fraction[1.5, 'ml'] <= 0.05
    assert np.mean([r.exact for r in groups[2.5, 'ml']]) >= 0.9

    ml = {r.trial: r.errors for r in groups[2.5, 'ml']}
    worse = sum(1 for r in groups[2.5, 'threshold'] if r.errors > ml[r.trial])
    assert worse >= 45


@pytest.mark.slow
def test_unbalanced_ml_and_max_row_coincide():
    cfg = ExperimentConfig(mode='planted', n=200, alpha=1.5, balanced=False, x_grid=(3.0,), trials=30,
                           algorithms=('ml', 'max-row'))
    groups = _by_key(run_sweep(cfg))
    ml = np.array([r.errors for r in groups[3.0, 'ml']], dtype=float)
    max_row = np.array([r.errors for r in groups[3.0, 'max-row']], dtype=float)
    pooled_se = math.sqrt((ml.var(ddof=1) + max_row.var(ddof=1)) / len(ml))
    assert abs(ml.mean() - max_row.mean()) <= 2 * pooled_se


@pytest.mark.slow
def test_exact_recovery_below_covering_bound():
    cfg = ExperimentConfig(mode='planted', n=200, x_grid=(1.2,), trials=30, algorithms=('ml',))
    records = run_sweep(cfg)
    exact_rate = np.mean([r.exact for r in records])
    assert exact_rate <= map_success_upper_bound(200, 0, solve_mu(1.2, 200))
    assert np.mean([r.errors for r in records]) >= 1
