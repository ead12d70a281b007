# memlab/tasks/sinusoid.py
"""sinusoid continuation: read 100 points, predict the next 100 clean points"""
import logging
from typing import Optional

import numpy as np

from tasks.sample import Sample, sample_rng
from tasks.specs import TaskSpec

logger = logging.getLogger(__name__)

OFFSET = 5.0
AMPLITUDE_RANGE = (1.0, 5.0)
FREQUENCY_RANGE = (10.0, 30.0)
PHASE_RANGE = (0.0, 100.0)
JITTER = 1.0        # x_t = (t + U(-1, 1)) / 1000
NOISE = 2.0         # additive U(-2, 2) on noisy inputs


def sinusoid_values(t: np.ndarray, amplitude: float, frequency: float, phase: float, jitter: np.ndarray) -> np.ndarray:
    x = (t + jitter) / 1000.0
    return OFFSET + amplitude * np.sin(2 * np.pi * frequency * x + phase)


def draw_sinusoid(spec: TaskSpec, rng: np.random.Generator, noisy: Optional[bool] = None) -> Sample:
    noisy = spec.noisy if noisy is None else noisy
    n = spec.min_length
    amplitude = spec.amplitude if spec.amplitude is not None else float(rng.uniform(*AMPLITUDE_RANGE))
    frequency = float(rng.uniform(*FREQUENCY_RANGE))
    phase = float(rng.uniform(*PHASE_RANGE))
    t = np.arange(1, 2 * n + 1, dtype=np.float64)
    clean = sinusoid_values(t, amplitude, frequency, phase, rng.uniform(-JITTER, JITTER, size=2 * n))

    observed = clean[:n].copy()
    if noisy:
        observed += rng.uniform(-NOISE, NOISE, size=n)
    if amplitude == 0:
        logger.warning("⚠️ sinusoid amplitude is 0, signal is the constant offset")

    inputs = np.zeros((2 * n, 1))
    inputs[:n, 0] = observed
    targets = np.zeros((2 * n, 1))
    targets[n:, 0] = clean[n:]
    mask = np.zeros(2 * n)
    mask[n:] = 1.0
    meta = {'task': 'sinusoid', 'amplitude': amplitude, 'frequency': frequency, 'phase': phase,
            'noisy': bool(noisy), 'degenerate': amplitude == 0}
    return Sample(inputs, targets, mask, 'real', meta)


def generate_sinusoid(spec: TaskSpec, noisy: Optional[bool] = None, index: int = 0) -> Sample:
    return draw_sinusoid(spec.for_kind('sinusoid', 'sinusoid'), sample_rng(spec.seed, index), noisy)
