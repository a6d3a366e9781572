import configparser
import logging
import math
import os

from dotenv import load_dotenv

from src.errors import ConfigError

logger = logging.getLogger(__name__)

ALGORITHMS = ('ml', 'max-row', 'threshold')
MODES = ('database', 'planted')

GENERAL_DEFAULTS = {
    'LOG_LEVEL': 'INFO',
    'LOG_FILE': 'logs/app.log',
    'OUTPUT_DIR': 'results',
}

EXPERIMENT_DEFAULTS = {
    'mode': 'planted',
    'n': 100,
    'alpha': 0.0,
    'balanced': True,
    'dims': 200,
    'x_grid': (1.0, 2.0, 3.0),
    'trials': 10,
    'seed': 0,
    'algorithms': ALGORITHMS,
    'tau': None,
    'oracle': False,
    'workers': 1,
}

# environment variable -> config key
ENV_OVERRIDES = {
    'ALIGNSIM_LOG_LEVEL': 'LOG_LEVEL',
    'ALIGNSIM_LOG_FILE': 'LOG_FILE',
    'ALIGNSIM_OUTPUT_DIR': 'OUTPUT_DIR',
    'ALIGNSIM_WORKERS': 'workers',
}


def parse_x_grid(text):
    """
    Parses a signal-strength grid.

    Accepts a comma separated list ('1,1.5,2') or an inclusive range 'a:b:step'.

    Returns:
        tuple[float, ...]: The grid values, all strictly positive.
    """
    text = str(text).strip()
    if not text:
        raise ConfigError("x grid is empty.")
    try:
        if ':' in text:
            parts = [float(p) for p in text.split(':')]
            if len(parts) != 3:
                raise ConfigError(f"Range '{text}' must have the form a:b:step.")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ConfigError(f"Range '{text}' needs step > 0 and b >= a.")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = tuple(round(start + i * step, 12) for i in range(count))
        else:
            values = tuple(float(p) for p in text.split(',') if p.strip())
    except ValueError as e:
        raise ConfigError(f"Malformed x grid '{text}': {e}") from e

    if not values or any(not math.isfinite(v) or v <= 0 for v in values):
        raise ConfigError(f"x grid '{text}' must contain finite values > 0.")
    return values


def parse_algorithms(text):
    names = tuple(a.strip() for a in str(text).split(',') if a.strip())
    unknown = [a for a in names if a not in ALGORITHMS]
    if not names or unknown:
        raise ConfigError(f"Unknown algorithm(s) {unknown or names}; choose from {ALGORITHMS}.")
    return names


def parse_tau(text):
    text = str(text).strip().lower()
    if text in ('', 'default', 'none'):
        return None
    try:
        return float(text)
    except ValueError as e:
        raise ConfigError(f"TAU must be 'default' or a number, got '{text}'.") from e


def apply_env_overrides(config_values):
    """Overrides selected values from the environment (and a .env file, if any)."""
    load_dotenv(override=False)
    for env_name, key in ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw is None or not raw.strip():
            continue
        if key == 'workers':
            try:
                config_values[key] = int(raw)
            except ValueError:
                logger.warning(f"Ignoring {env_name}='{raw}': not an integer.")
                continue
        else:
            config_values[key] = raw.strip()
        logger.debug(f"{key} overridden from environment variable {env_name}.")
    return config_values


def default_config():
    """Returns the configuration built from defaults and environment overrides only."""
    config_values = dict(EXPERIMENT_DEFAULTS)
    config_values.update(GENERAL_DEFAULTS)
    return apply_env_overrides(config_values)


def load_config(config_path='config/config.ini'):
    """
    Loads experiment and logging configuration from an INI file.

    Args:
        config_path (str): Path to the configuration file.

    Returns:
        dict: Configuration values, or None if an error occurs.
    """
    if not os.path.exists(config_path):
        logger.error(f"Configuration file '{config_path}' not found.")
        return None

    config = configparser.ConfigParser()
    try:
        config.read(config_path)
    except configparser.Error as e:
        logger.error(f"Error reading configuration file '{config_path}': {e}", exc_info=True)
        return None

    if 'EXPERIMENT' not in config:
        logger.error(f"Missing [EXPERIMENT] section in '{config_path}'.")
        return None

    config_values = dict(EXPERIMENT_DEFAULTS)
    section = config['EXPERIMENT']
    try:
        config_values['mode'] = config.get('EXPERIMENT', 'MODE').strip().lower()
        config_values['n'] = config.getint('EXPERIMENT', 'N')
        config_values['x_grid'] = parse_x_grid(config.get('EXPERIMENT', 'X_GRID'))
        config_values['alpha'] = section.getfloat('ALPHA', fallback=EXPERIMENT_DEFAULTS['alpha'])
        config_values['balanced'] = section.getboolean('BALANCED', fallback=EXPERIMENT_DEFAULTS['balanced'])
        config_values['dims'] = section.getint('DIMS', fallback=EXPERIMENT_DEFAULTS['dims'])
        config_values['trials'] = section.getint('TRIALS', fallback=EXPERIMENT_DEFAULTS['trials'])
        config_values['seed'] = section.getint('SEED', fallback=EXPERIMENT_DEFAULTS['seed'])
        config_values['oracle'] = section.getboolean('ORACLE', fallback=EXPERIMENT_DEFAULTS['oracle'])
        config_values['workers'] = section.getint('WORKERS', fallback=EXPERIMENT_DEFAULTS['workers'])
        if 'ALGORITHMS' in section:
            config_values['algorithms'] = parse_algorithms(section.get('ALGORITHMS'))
        if 'TAU' in section:
            config_values['tau'] = parse_tau(section.get('TAU'))
    except configparser.NoOptionError as e:
        logger.error(f"Missing option in [EXPERIMENT] section of '{config_path}': {e}", exc_info=True)
        return None
    except ConfigError as e:
        logger.error(f"Invalid value in [EXPERIMENT] section of '{config_path}': {e}")
        return None
    except ValueError as e:  # getint / getfloat / getboolean
        logger.error(f"Invalid value in [EXPERIMENT] section of '{config_path}': {e}", exc_info=True)
        return None

    if config_values['mode'] not in MODES:
        logger.error(f"MODE must be one of {MODES} in '{config_path}', got '{config_values['mode']}'.")
        return None

    config_values.update(GENERAL_DEFAULTS)
    if 'GENERAL' in config:
        for key, default in GENERAL_DEFAULTS.items():
            value = config.get('GENERAL', key, fallback=default).strip()
            if value:
                config_values[key] = value

    apply_env_overrides(config_values)
    logger.debug(f"Configuration loaded from '{config_path}': {config_values}")
    return config_values


def build_experiment_config(values, **overrides):
    """
    Merges loaded configuration values with CLI overrides into an ExperimentConfig.

    Overrides equal to None are ignored. Raises ConfigError when the result is invalid.
    """
    from src.experiment_runner import ExperimentConfig

    merged = dict(EXPERIMENT_DEFAULTS)
    merged.update({k: v for k, v in (values or {}).items() if k in EXPERIMENT_DEFAULTS})
    merged.update({k: v for k, v in overrides.items() if v is not None})

    if isinstance(merged['x_grid'], str):
        merged['x_grid'] = parse_x_grid(merged['x_grid'])
    if isinstance(merged['algorithms'], str):
        merged['algorithms'] = parse_algorithms(merged['algorithms'])

    cfg = ExperimentConfig(
        mode=merged['mode'],
        n=int(merged['n']),
        alpha=float(merged['alpha']),
        balanced=bool(merged['balanced']),
        dims=int(merged['dims']),
        x_grid=tuple(float(x) for x in merged['x_grid']),
        trials=int(merged['trials']),
        master_seed=int(merged['seed']),
        algorithms=tuple(merged['algorithms']),
        tau=merged['tau'],
        oracle=bool(merged['oracle']),
        workers=int(merged['workers']),
    )
    cfg.validate()
    return cfg
