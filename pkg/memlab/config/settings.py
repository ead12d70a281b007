"""
settings for the memlab project.

process-level knobs come from the environment (or a .env file) through
python-decouple; per-experiment settings live in config/experiments/*.toml
and are validated by harness.run_config.
"""

import logging.config
from pathlib import Path

from decouple import config

# build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent
EXPERIMENTS_DIR = BASE_DIR / 'config' / 'experiments'

DEBUG = config('MEMLAB_DEBUG', default=False, cast=bool)

# ==========================================
# RUNS
# ==========================================

RUNS_DIR = Path(config('MEMLAB_RUNS_DIR', default=str(BASE_DIR / 'runs')))

# evaluation fan-out and brute-force enumeration
N_JOBS = config('MEMLAB_N_JOBS', default=1, cast=int)

# show tqdm bars during training/eval
SHOW_PROGRESS = config('MEMLAB_PROGRESS', default=True, cast=bool)

# wall_ms column of metrics.csv; off gives byte-identical logs across reruns
RECORD_WALL_TIME = config('MEMLAB_RECORD_WALL_TIME', default=True, cast=bool)

# ==========================================
# NUMERICS
# ==========================================

# every forward op checks its output for nan/inf
CHECK_FINITE = config('MEMLAB_CHECK_FINITE', default=True, cast=bool)

# guard for exhaustive schedule enumeration
BRUTE_FORCE_LIMIT = config('MEMLAB_BRUTE_FORCE_LIMIT', default=1_000_000, cast=int)

# ==========================================
# CHECKPOINTS
# ==========================================

CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_MAGIC = b'MEMLABCK'

# ==========================================
# LOGGING CONFIGURATION
# ==========================================

LOG_LEVEL = config('MEMLAB_LOG_LEVEL', default='DEBUG' if DEBUG else 'INFO')
LOG_TO_FILE = config('MEMLAB_LOG_TO_FILE', default=False, cast=bool)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
        'detailed': {
            'format': '{asctime} - {name} - {levelname} - {funcName}:{lineno} - {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'level': 'WARNING',
        'handlers': ['console'],
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for app in (
            'core', 'controllers', 'ntm', 'dnc', 'scheduling', 'capacity',
            'programs', 'variational', 'dual', 'classic', 'tasks', 'harness',
        )
    },
}


def configure_logging(log_dir: Path = None) -> None:
    """apply LOGGING, optionally adding a file handler under log_dir"""
    logging_config = dict(LOGGING)
    if LOG_TO_FILE or log_dir is not None:
        target = Path(log_dir or RUNS_DIR)
        target.mkdir(parents=True, exist_ok=True)
        logging_config['handlers'] = dict(LOGGING['handlers'])
        logging_config['handlers']['file'] = {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': str(target / 'memlab.log'),
            'formatter': 'detailed',
        }
        logging_config['loggers'] = {
            name: {**spec, 'handlers': spec['handlers'] + ['file']}
            for name, spec in LOGGING['loggers'].items()
        }
    logging.config.dictConfig(logging_config)
