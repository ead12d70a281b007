# memlab/tests/conftest.py
import os

# settings are read at import time; keep test runs quiet and reproducible
os.environ.setdefault('MEMLAB_PROGRESS', 'false')
os.environ.setdefault('MEMLAB_RECORD_WALL_TIME', 'false')
os.environ.setdefault('MEMLAB_N_JOBS', '1')

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def runs_dir(tmp_path, monkeypatch):
    from config import settings
    path = tmp_path / 'runs'
    monkeypatch.setattr(settings, 'RUNS_DIR', path)
    return path
