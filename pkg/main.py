import argparse
import os
import sys

# allow `python main.py` from the project root
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

import logging

import numpy as np

from src.config_manager import ALGORITHMS, build_experiment_config, default_config, load_config, parse_tau
from src.errors import AlignmentError, ConfigError, InfeasibleRho, IoError
from src.experiment_runner import ExperimentRunner
from src.logger_setup import setup_logger
from src.model import canonicalize, condition1_margin, load_correlation_model
from src.results_writer import aggregate, emit
from src.theory.boundaries import (
    ALMOST_EXACT,
    CONVERSE,
    ERROR_EXPONENT,
    EXACT,
    Regime,
    boundary_curve,
    export_curves,
)

CONFIG_FILE_PATH = 'config/config.ini'
CONFIG_EXAMPLE_PATH = 'config/config.example.ini'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

DESK_SCALE_LIMIT = 3000

# Load config to get log settings early
loaded_config = load_config(CONFIG_FILE_PATH) if os.path.exists(CONFIG_FILE_PATH) else None
if not loaded_config:
    loaded_config = default_config()

log_level = loaded_config.get('LOG_LEVEL', 'INFO')
log_file = loaded_config.get('LOG_FILE', 'logs/app.log')
setup_logger(log_level, log_file)

logger = logging.getLogger(__name__)


def resolve_config(config_path):
    """Loads the configuration named on the command line, the default file, or built-in defaults."""
    if config_path:
        return load_config(config_path)
    if os.path.exists(CONFIG_FILE_PATH):
        return load_config(CONFIG_FILE_PATH)
    logger.info(f"No '{CONFIG_FILE_PATH}' found; using built-in defaults. "
                f"Copy '{CONFIG_EXAMPLE_PATH}' to customize.")
    return default_config()


def _balanced_flag(args):
    if args.balanced:
        return True
    if args.alpha is not None:
        return False
    return None


def handle_sweep(args):
    logger.info("Handling sweep command...")
    values = resolve_config(args.config)
    if not values:
        logger.error("Failed to load configuration. Please check its format and content.")
        return EXIT_CONFIG

    try:
        cfg = build_experiment_config(
            values,
            mode=args.mode,
            n=args.n,
            alpha=args.alpha,
            balanced=_balanced_flag(args),
            dims=args.dims,
            x_grid=args.x,
            trials=args.trials,
            seed=args.seed,
            algorithms=tuple(args.algo) if args.algo else None,
            tau=parse_tau(args.tau) if args.tau is not None else None,
            oracle=True if args.oracle else None,
            workers=args.workers,
        )
        if cfg.n > DESK_SCALE_LIMIT:
            logger.warning(f"n={cfg.n} is above {DESK_SCALE_LIMIT}; the O(n^3) assignment will be slow.")

        runner = ExperimentRunner(cfg)
        records = runner.run()
        summary = aggregate(records)
        for _, row in summary.iterrows():
            logger.info(f"x={row['x']:g} {row['algorithm']:>9}: mean errors {row['mean_errors']:.3f}, "
                        f"exact rate {row['exact_rate']:.2f}")

        overlay = [boundary_curve(a, cfg.regime, ERROR_EXPONENT) for a in cfg.algorithms] if args.overlay else []
        out = args.out or os.path.join(values.get('OUTPUT_DIR', 'results'), f"sweep_{cfg.mode}_n{cfg.n}.csv")
        metadata = cfg.as_dict()
        metadata['n_v'] = cfg.n_v
        metadata['condition1_margin'] = runner.condition1_margin
        emit(summary, overlay, out, config=metadata)
        return EXIT_OK
    except ConfigError as e:
        logger.error(f"Invalid experiment configuration: {e}")
        return EXIT_CONFIG
    except InfeasibleRho as e:
        logger.error(f"Infeasible parameters: {e}")
        return EXIT_INFEASIBLE
    except IoError as e:
        logger.error(f"Could not write results: {e}")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"An error occurred during sweep: {e}", exc_info=True)
        return EXIT_FAILURE


def handle_curves(args):
    logger.info("Handling curves command...")
    try:
        regime = Regime(None) if args.balanced or args.alpha is None else Regime(args.alpha)
        if args.points < 1 or not args.beta_max > 0:
            raise ConfigError("--points must be >= 1 and --beta-max > 0.")
        betas = np.linspace(args.beta_max / args.points, args.beta_max, args.points)
        curves = []
        for algorithm in ALGORITHMS:
            for kind in (ERROR_EXPONENT, EXACT, ALMOST_EXACT):
                curves.append(boundary_curve(algorithm, regime, kind, betas))
        # the converse does not depend on the algorithm
        curves.append(boundary_curve('ml', regime, CONVERSE, betas))
        export_curves(curves, args.out)
        return EXIT_OK
    except (ConfigError, ValueError) as e:
        logger.error(f"Invalid curve parameters: {e}")
        return EXIT_CONFIG
    except IoError as e:
        logger.error(f"Could not write curves: {e}")
        return EXIT_FAILURE


def handle_model(args):
    logger.info(f"Handling model command for {args.path}...")
    try:
        model = load_correlation_model(args.path)
        canonical, _ = canonicalize(model)
        margin = condition1_margin(model)
    except ConfigError as e:
        logger.error(f"Failed to load model: {e}")
        return EXIT_CONFIG
    except AlignmentError as e:
        logger.error(f"Model is not a valid joint Gaussian: {e}")
        return EXIT_CONFIG

    logger.info("\n--- Canonical form ---")
    logger.info(f"rho: {np.array2string(canonical.rho, precision=6)}")
    logger.info(f"I_XY: {canonical.i_xy:.6f} nats")
    logger.info(f"rho_max: {canonical.rho_max:.6f}")
    logger.info(f"Condition-1 margin: {margin:.6f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(description="Gaussian database alignment and planted matching simulator")
    subparsers = parser.add_subparsers(dest='command', help='Available commands', required=True)

    # Sweep command
    parser_sweep = subparsers.add_parser('sweep', help='Run a Monte Carlo sweep over signal strength.')
    parser_sweep.add_argument('--config', type=str, default=None, help="INI configuration file.")
    parser_sweep.add_argument('--mode', type=str, choices=['database', 'planted'], default=None)
    parser_sweep.add_argument('--n', type=int, default=None, help="Number of users on the smaller side.")
    parser_sweep.add_argument('--alpha', type=float, default=None, help="Excess exponent: n_v = n + round(n^alpha).")
    parser_sweep.add_argument('--balanced', action='store_true', help="Use n_v = n.")
    parser_sweep.add_argument('--dims', type=int, default=None, help="Feature dimension (database mode).")
    parser_sweep.add_argument('--x', type=str, default=None, help="Signal strengths: '1,1.5,2' or 'a:b:step'.")
    parser_sweep.add_argument('--trials', type=int, default=None)
    parser_sweep.add_argument('--seed', type=int, default=None)
    parser_sweep.add_argument('--algo', type=str, action='append', choices=list(ALGORITHMS), default=None,
                              help="Algorithm to run; repeat for several. Default: all.")
    parser_sweep.add_argument('--tau', type=str, default=None, help="Threshold: 'default' or a number.")
    parser_sweep.add_argument('--out', type=str, default=None, help="CSV output path.")
    parser_sweep.add_argument('--overlay', action='store_true', help="Append achievability curves to the CSV.")
    parser_sweep.add_argument('--oracle', action='store_true', help="Cross-check ML against brute force (n <= 8, n_v <= 10).")
    parser_sweep.add_argument('--workers', type=int, default=None, help="Worker processes. Default: 1.")
    parser_sweep.set_defaults(func=handle_sweep)

    # Curves command
    parser_curves = subparsers.add_parser('curves', help='Export theoretical phase boundaries to CSV.')
    parser_curves.add_argument('--alpha', type=float, default=None)
    parser_curves.add_argument('--balanced', action='store_true')
    parser_curves.add_argument('--beta-max', type=float, default=2.0)
    parser_curves.add_argument('--points', type=int, default=200)
    parser_curves.add_argument('--out', type=str, default='results/curves.csv')
    parser_curves.set_defaults(func=handle_curves)

    # Model command
    parser_model = subparsers.add_parser('model', help='Canonicalize a correlation model file.')
    parser_model.add_argument('path', type=str, help="Model INI file.")
    parser_model.set_defaults(func=handle_model)
    return parser


def main(argv=None):
    logger.info("Application started.")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
