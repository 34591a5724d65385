"""
Configuration for the mcrgames toolkit.

Settings that shape computed data (prices, slot counts, enumeration budgets)
are constants so that every artifact is a pure function of its input files
and command-line flags. Only the diagnostics settings are read from the
environment (or a `.env` file at the repository root).

Usage:
    from mcrgames.config import BaseConfig
    budget = BaseConfig.BRUTE_FORCE_BUDGET
"""
import os

from dotenv import load_dotenv

# Load environment variables from a .env file, if present.
env_path = os.path.join(os.path.dirname(os.path.dirname(__file__)), '.env')
load_dotenv(env_path)


class BaseConfig:
    """
    Base configuration for the solver library and the command-line tool.

    This class groups:
      - Logging settings (level, optional rotating log file).
      - Artifact format settings (schema version).
      - Micro-grid defaults (slots, prices, generator sizes).
      - Enumeration budgets for the brute-force oracles and grid builders.
    """

    # --------------------------
    # Logging
    # --------------------------
    LOG_LEVEL = os.getenv("MCR_LOG_LEVEL", "WARNING").upper()
    LOG_FILE = os.getenv("MCR_LOG_FILE") or None
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'
    LOG_BACKUP_COUNT = 7

    # --------------------------
    # Artifact formats
    # --------------------------
    SCHEMA_VERSION = 1

    # --------------------------
    # Micro-grid defaults
    # --------------------------
    DEFAULT_SLOTS = 96           # one day in 15 minute slots
    BENCH_SLOTS = 6
    DEFAULT_P_IN = 1
    DEFAULT_P_OUT = 2
    MAX_PRODUCTION = 6           # generator production levels are drawn in [1, MAX_PRODUCTION]
    PRODUCTION_PIECES = 3        # upper bound on piecewise-constant production segments
    MAX_INTERVAL = 3             # generated task intervals span at most this many slots

    # --------------------------
    # Budgets and workers
    # --------------------------
    BRUTE_FORCE_BUDGET = 200_000
    MAX_GRID_VERTICES = 2_000_000
    DEFAULT_THREADS = 1


class TestConfig(BaseConfig):
    """Configuration used by the test-suite: smaller budgets, verbose logs."""
    LOG_LEVEL = "DEBUG"
    LOG_FILE = None
    BRUTE_FORCE_BUDGET = 50_000
