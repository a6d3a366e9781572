import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass

import numpy as np

from src.config_manager import ALGORITHMS, MODES
from src.errors import AlignmentError, ConfigError, InfeasibleRho
from src.estimators import brute_force_ml, get_estimator
from src.estimators.alignment_estimator import BRUTE_FORCE_MAX_U, BRUTE_FORCE_MAX_V, ML, THRESHOLD
from src.mismatch import count_errors, misaligned_users
from src.model import CanonicalCorrelation
from src.score import info_density_canonical, planted_score
from src.synth import sample_database_pair, sample_mapping, sample_planted, substream
from src.theory.boundaries import Regime

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-9
CONDITION1_WARNING = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n: int
    alpha: float = 0.0
    balanced: bool = True
    dims: int = 200
    x_grid: tuple = (1.0, 2.0, 3.0)
    trials: int = 1
    master_seed: int = 0
    algorithms: tuple = ALGORITHMS
    tau: float = None
    oracle: bool = False
    workers: int = 1
    output_dir: str = 'results'

    def validate(self):
        """Raises ConfigError when a field is out of range."""
        problems = []
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES}, got '{self.mode}'")
        if self.n < 2:
            problems.append(f"n must be >= 2, got {self.n}")
        if not self.balanced and (not math.isfinite(self.alpha) or self.alpha < 0):
            problems.append(f"alpha must be >= 0, got {self.alpha}")
        if self.mode == 'database' and self.dims < 1:
            problems.append(f"database mode needs dims >= 1, got {self.dims}")
        if not self.x_grid or any(not math.isfinite(x) or x <= 0 for x in self.x_grid):
            problems.append(f"x values must be finite and > 0, got {self.x_grid}")
        if self.trials < 1:
            problems.append(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            problems.append(f"seed must be >= 0, got {self.master_seed}")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            problems.append(f"algorithms must be a non-empty subset of {ALGORITHMS}, got {self.algorithms}")
        if len(set(self.algorithms)) != len(self.algorithms):
            problems.append(f"algorithms contain duplicates: {self.algorithms}")
        if self.tau is not None and not math.isfinite(self.tau):
            problems.append(f"tau must be finite, got {self.tau}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        if problems:
            message = '; '.join(problems)
            logger.error(f"Invalid experiment configuration: {message}")
            raise ConfigError(message)
        return self

    @property
    def n_v(self):
        return self.n if self.balanced else self.n + int(round(self.n ** self.alpha))

    @property
    def regime(self):
        return Regime(None) if self.balanced else Regime(self.alpha)

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TrialRecord:
    x: float
    algorithm: str
    trial: int
    errors: int
    exact: bool
    wall_time: float
    x_index: int = 0
    seed_key: tuple = ()
    n: int = 0
    n_v: int = 0
    rho: float = None
    mu: float = None
    false_positives: int = 0
    false_negatives: int = 0

    def as_dict(self):
        return asdict(self)


def solve_rho(x, n, dims):
    """
    Uniform per-dimension correlation giving I_XY = x·log n.

    -(D/2)·log(1-ρ²) = x·log n  =>  ρ = sqrt(1 - exp(-2x·log n / D))
    """
    exponent = 2.0 * x * math.log(n) / dims
    rho = math.sqrt(-math.expm1(-exponent))
    if not rho < 1.0:
        logger.error(f"x={x} needs I_XY={x * math.log(n):.3f} nats from {dims} dims; rho rounds to 1.")
        raise InfeasibleRho(f"x={x} is not reachable with dims={dims} (requires rho >= 1).")
    return rho


def solve_mu(x, n):
    """Planted mean gap with ζ = μ²/2 = x·log n."""
    return math.sqrt(2.0 * x * math.log(n))


def _run_trial(cfg, x_index, trial, strength):
    """Samples one instance and runs every configured algorithm on it."""
    x = cfg.x_grid[x_index]
    n, n_v = cfg.n, cfg.n_v
    seed_key = (cfg.master_seed, x_index, trial)
    rng = substream(*seed_key)
    truth = sample_mapping(n, n_v, n, rng)
    if cfg.mode == 'planted':
        scores = planted_score(sample_planted(strength, truth, n, n_v, rng))
        rho, mu = None, strength
    else:
        rho_vector = np.full(cfg.dims, strength)
        scores = info_density_canonical(sample_database_pair(rho_vector, truth, n, n_v, rng), rho_vector)
        rho, mu = strength, None

    records = []
    for algorithm in cfg.algorithms:
        start = time.perf_counter()
        estimate = get_estimator(algorithm, cfg.tau).estimate(scores)
        wall_time = time.perf_counter() - start

        fp = fn = 0
        if algorithm == THRESHOLD:
            report = count_errors(estimate, truth)
            fp, fn = report.false_positives, report.false_negatives
            errors = misaligned_users(estimate, truth)
        else:
            errors = count_errors(estimate, truth).errors

        if cfg.oracle and algorithm == ML and n <= BRUTE_FORCE_MAX_U and n_v <= BRUTE_FORCE_MAX_V:
            oracle = brute_force_ml(scores)
            if abs(oracle.objective - estimate.objective) > ORACLE_TOLERANCE:
                logger.error(f"Oracle mismatch at x={x}, trial={trial}: {estimate.objective} vs {oracle.objective}")
                raise AlignmentError(f"ML objective {estimate.objective} differs from brute force {oracle.objective}.")

        records.append(TrialRecord(
            x=x, algorithm=algorithm, trial=trial, errors=errors, exact=errors == 0,
            wall_time=wall_time, x_index=x_index, seed_key=seed_key, n=n, n_v=n_v,
            rho=rho, mu=mu, false_positives=fp, false_negatives=fn,
        ))
    return records


class ExperimentRunner:
    """
    Runs a Monte Carlo sweep over the x grid.

    Every (x, trial) pair owns the random stream (master_seed, x_index, trial)
    and all algorithms are scored on that same instance, so algorithms are
    compared on paired trials. Results do not depend on the worker count.
    """

    def __init__(self, cfg):
        self.cfg = cfg.validate()
        self.strengths = {}
        self.condition1_margin = None
        logger.debug(f"ExperimentRunner initialized for {cfg.mode} mode, n={cfg.n}, n_v={cfg.n_v}.")

    def _resolve_strengths(self):
        cfg = self.cfg
        for x in cfg.x_grid:
            if cfg.mode == 'planted':
                self.strengths[x] = solve_mu(x, cfg.n)
            else:
                self.strengths[x] = solve_rho(x, cfg.n, cfg.dims)
            logger.debug(f"x={x}: {'mu' if cfg.mode == 'planted' else 'rho'}={self.strengths[x]:.6f}")

        if cfg.mode == 'database':
            rho_max = max(self.strengths.values())
            # the sweep model is already canonical (rho*I), its margin is the largest rho
            self.condition1_margin = CanonicalCorrelation(np.full(cfg.dims, rho_max)).rho_max
            logger.info(f"Condition-1 margin (largest canonical correlation): {self.condition1_margin:.4f}")
            if self.condition1_margin > CONDITION1_WARNING:
                logger.warning(f"Condition-1 margin {self.condition1_margin:.3f} is large; "
                               f"the low-correlation regime does not apply.")

    def _tasks(self):
        for x_index, x in enumerate(self.cfg.x_grid):
            for trial in range(self.cfg.trials):
                yield x_index, trial, self.strengths[x]

    def run(self):
        """
        Executes every trial.

        Returns:
            list[TrialRecord]: sorted by (x index, algorithm order, trial).
        """
        self._resolve_strengths()
        cfg = self.cfg
        tasks = list(self._tasks())
        if cfg.oracle and (cfg.n > BRUTE_FORCE_MAX_U or cfg.n_v > BRUTE_FORCE_MAX_V):
            logger.warning(f"Oracle cross-check skipped: {cfg.n}x{cfg.n_v} exceeds the brute force limit.")
        logger.info(f"Running {len(tasks)} instances x {len(cfg.algorithms)} algorithms with {cfg.workers} worker(s).")

        records = []
        if cfg.workers == 1:
            for x_index, trial, strength in tasks:
                records.extend(_run_trial(cfg, x_index, trial, strength))
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
                futures = [executor.submit(_run_trial, cfg, *task) for task in tasks]
                for i, future in enumerate(as_completed(futures)):
                    records.extend(future.result())
                    if (i + 1) % max(1, len(futures) // 10) == 0:
                        logger.info(f"Completed {i + 1}/{len(futures)} instances.")

        order = {name: i for i, name in enumerate(cfg.algorithms)}
        records.sort(key=lambda r: (r.x_index, order[r.algorithm], r.trial))
        logger.info(f"Sweep finished: {len(records)} records.")
        return records


def run_sweep(cfg):
    return ExperimentRunner(cfg).run()
