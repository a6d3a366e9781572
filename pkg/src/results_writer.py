import json
import logging
import math
import os
import subprocess
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from src.errors import EmptyInput, IoError
from src.theory.boundaries import Regime, achievability_boundary

logger = logging.getLogger(__name__)

PACKAGE_VERSION = '0.1.0'

CSV_COLUMNS = ['mode', 'algorithm', 'n', 'alpha', 'x', 'mean_errors', 'log_ratio', 'exact_rate', 'ci', 'boundary_x']
SIDECAR_EXTRAS = ['mode', 'algorithm', 'x', 'n_v', 'trials', 'mean_errors_se', 'zero_errors']

# normal approximation, 95%
CI_Z = 1.96


def _mode_of(record):
    return 'planted' if record.mu is not None else 'database'


def aggregate(records):
    """
    Folds trial records into one summary row per (x, algorithm).

    Rows keep the order of the sweep: x index first, then the order in which
    algorithms appear. All-zero errors give log_ratio = -inf and zero_errors = True.

    Returns:
        pd.DataFrame: columns mode, algorithm, n, n_v, alpha, x, trials,
        mean_errors, mean_errors_se, log_ratio, exact_rate, ci, zero_errors.
    """
    if not records:
        logger.error("aggregate called with no records.")
        raise EmptyInput("Cannot aggregate an empty record list.")

    df = pd.DataFrame([
        {
            'mode': _mode_of(r),
            'algorithm': r.algorithm,
            'n': r.n,
            'n_v': r.n_v,
            'x_index': r.x_index,
            'x': r.x,
            'errors': r.errors,
            'exact': bool(r.exact),
        }
        for r in records
    ])
    algorithm_order = {name: i for i, name in enumerate(dict.fromkeys(df['algorithm']))}
    df['algorithm_index'] = df['algorithm'].map(algorithm_order)

    rows = []
    keys = ['x_index', 'algorithm_index', 'mode', 'algorithm', 'n', 'n_v', 'x']
    for (_, _, mode, algorithm, n, n_v, x), group in df.groupby(keys, sort=True):
        trials = len(group)
        errors = group['errors'].to_numpy(dtype=float)
        mean_errors = float(errors.mean())
        se = float(errors.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        exact_rate = float(group['exact'].mean())
        zero_errors = mean_errors == 0.0
        log_ratio = -math.inf if zero_errors else math.log(mean_errors) / math.log(n)
        rows.append({
            'mode': mode,
            'algorithm': algorithm,
            'n': int(n),
            'n_v': int(n_v),
            'alpha': 0.0 if n_v == n else math.log(n_v - n) / math.log(n),
            'x': float(x),
            'trials': trials,
            'mean_errors': mean_errors,
            'mean_errors_se': se,
            'log_ratio': log_ratio,
            'exact_rate': exact_rate,
            'ci': CI_Z * math.sqrt(exact_rate * (1.0 - exact_rate) / trials),
            'zero_errors': zero_errors,
        })
    summary = pd.DataFrame(rows)
    if summary['zero_errors'].all():
        logger.warning("Every summary row has zero errors; log ratios are all -inf.")
    logger.debug(f"Aggregated {len(records)} records into {len(summary)} rows.")
    return summary


def _boundary_x(row):
    beta = 1.0 - row['log_ratio']
    if not math.isfinite(beta) or beta <= 0:
        return np.nan
    regime = Regime.from_sizes(int(row['n']), int(row['n_v']))
    return achievability_boundary(row['algorithm'], regime, beta).x


def _overlay_rows(curves):
    rows = []
    for curve in curves:
        for point in curve.points:
            rows.append({
                'mode': 'theory',
                'algorithm': curve.algorithm,
                'n': np.nan,
                'alpha': curve.regime.alpha_value,
                'x': point.x,
                'mean_errors': np.nan,
                'log_ratio': 1.0 - point.beta,
                'exact_rate': np.nan,
                'ci': np.nan,
                'boundary_x': point.x,
            })
    return rows


def describe_version():
    """`git describe --always --dirty` when run inside a checkout, else the package version."""
    try:
        result = subprocess.run(
            ['git', 'describe', '--always', '--dirty'],
            capture_output=True, text=True, timeout=5, check=True,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        return result.stdout.strip() or PACKAGE_VERSION
    except (OSError, subprocess.SubprocessError):
        return PACKAGE_VERSION


def sidecar_path(path):
    return os.path.splitext(str(path))[0] + '.json'


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (np.integer, np.floating, np.bool_)):
        return _json_value(value.item())
    return value


def emit(summary, theory_overlay, path, config=None):
    """
    Writes the summary CSV and its JSON sidecar.

    Args:
        summary (pd.DataFrame | None): output of aggregate; None or empty gives a header-only CSV.
        theory_overlay (list[BoundaryCurve]): curves appended as mode=theory rows.
        path (str): CSV destination. The sidecar goes next to it with a .json suffix.
        config (dict | None): configuration recorded in the sidecar.

    Returns:
        str: the CSV path.
    """
    rows = []
    summary = summary if summary is not None else pd.DataFrame()
    for _, row in summary.iterrows():
        record = {column: row[column] for column in CSV_COLUMNS if column != 'boundary_x'}
        record['boundary_x'] = _boundary_x(row)
        rows.append(record)
    overlay = list(theory_overlay or [])
    rows.extend(_overlay_rows(overlay))
    df = pd.DataFrame(rows, columns=CSV_COLUMNS)
    df['n'] = df['n'].astype('Int64')

    sidecar = {
        'config': {k: _json_value(v) for k, v in (config or {}).items()},
        'version': describe_version(),
        'created': datetime.now(timezone.utc).isoformat(),
        'rows': [
            {k: _json_value(row[k]) for k in SIDECAR_EXTRAS if k in row}
            for _, row in summary.iterrows()
        ],
        'overlay': [
            {'algorithm': c.algorithm, 'kind': c.kind, 'regime': c.regime.label, 'points': len(c.points)}
            for c in overlay
        ],
    }

    try:
        directory = os.path.dirname(str(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        df.to_csv(path, index=False)
        with open(sidecar_path(path), 'w') as f:
            json.dump(sidecar, f, indent=2, default=str)
    except OSError as e:
        logger.error(f"Error saving results to {path}: {e}", exc_info=True)
        raise IoError(f"Could not write {path}: {e}") from e

    logger.info(f"Results saved to {path} ({len(df)} rows), metadata in {sidecar_path(path)}")
    return path
