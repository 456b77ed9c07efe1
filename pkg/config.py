"""
  Configuration for toeplitz-lab

  This module reads configuration from environment variables with sensible defaults.
  A run can override most of these with its JSON experiment file or command line flags.

  Configure:
  - Debug level and log handlers
  - Output directory, worker threads, seed
  - Quadrature tolerances
  - Default k-ladder and Monte-Carlo budget

  The experiment registry lives in experiments.py

"""

import os


def _get_bool_env(name, default):
    """Get boolean value from environment variable."""
    value = os.environ.get(name)
    if value is None:
        return default
    return value.lower() in ('true', '1', 'yes', 'on')


def _get_int_env(name, default):
    """Get integer value from environment variable."""
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _get_float_env(name, default):
    """Get float value from environment variable."""
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        return default


def _get_ladder_env(name, default):
    """
    Get a comma separated list of positive integers from environment variable.

    Returns:
        tuple: the ladder, or default when unset or malformed
    """
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        ladder = tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        return default
    if not ladder or any(k < 1 for k in ladder):
        return default
    return ladder


# [ LOGLEVELS ]
# DEBUG, INFO, WARNING, ERROR, CRITICAL
loglevel = os.environ.get("BTLAB_LOGLEVEL", "INFO")

# Add a syslog handler when /dev/log exists
SYSLOG = _get_bool_env("BTLAB_SYSLOG", True)

# [ RUNS ]
# CSV and JSON results are written to <OUTPUT_DIR>/<experiment>-<timestamp>.{csv,json}
OUTPUT_DIR = os.environ.get("BTLAB_OUTPUT_DIR", "results")

# Worker threads per run; k-values of a ladder and Monte-Carlo blocks are spread over them
JOBS = _get_int_env("BTLAB_JOBS", 1)

# Seed for sampling experiments; None means the experiment file (or --seed) must set one
SEED = _get_int_env("BTLAB_SEED", None)

# [ QUADRATURE ]
ABS_TOL = _get_float_env("BTLAB_ABS_TOL", 1e-12)
REL_TOL = _get_float_env("BTLAB_REL_TOL", 1e-10)
MAX_REFINEMENTS = _get_int_env("BTLAB_MAX_REFINEMENTS", 200)

# [ CONVERGENCE EXPERIMENTS ]
K_LADDER = _get_ladder_env("BTLAB_K_LADDER", (100, 200, 400, 800))

# Monte-Carlo budget (about 10^6) and block size; block b always draws from stream (seed, b)
MC_SAMPLES = _get_int_env("BTLAB_MC_SAMPLES", 2 ** 20)
SAMPLE_BLOCK = _get_int_env("BTLAB_SAMPLE_BLOCK", 2 ** 12)
