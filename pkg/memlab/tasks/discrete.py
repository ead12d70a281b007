# memlab/tasks/discrete.py
"""token tasks for the memorisation experiments: double, copy, reverse, add, max"""
import logging
from typing import List

import numpy as np

from core.exceptions import ArgumentError
from tasks.sample import Sample, sample_rng
from tasks.specs import FAMILIES, TaskSpec
from tasks.tokens import to_tokens, token_sample, vocab_for

logger = logging.getLogger(__name__)

DISCRETE_KINDS = FAMILIES['discrete']


def discrete_target(kind: str, x: List[int]) -> List[int]:
    """target values from input values; add floors odd sums"""
    T = len(x)
    if kind == 'double':
        return list(x) + list(x)
    if kind in ('copy', 'long_copy', 'noisy_copy'):
        return list(x)
    if kind == 'reverse':
        return list(x[::-1])
    if kind == 'add':
        # 1-based: y_t = (x_t + x_{T-t}) / 2 for t <= T // 2
        return [(x[t - 1] + x[T - t - 1]) // 2 for t in range(1, T // 2 + 1)]
    if kind == 'max':
        return [max(x[2 * t - 2], x[2 * t - 1]) for t in range(1, T // 2 + 1)]
    raise ArgumentError(f"unknown discrete task {kind}")


def draw_discrete(kind: str, spec: TaskSpec, rng: np.random.Generator) -> Sample:
    if kind not in DISCRETE_KINDS:
        raise ArgumentError(f"unknown discrete task {kind}, expected one of {DISCRETE_KINDS}")
    spec = spec.for_kind(kind, 'discrete')
    L = int(rng.integers(spec.min_length, spec.max_length + 1))
    if kind in ('add', 'max') and L < 2:
        raise ArgumentError(f"{kind} needs sequences of length >= 2")
    x = rng.integers(spec.min_value, spec.max_value + 1, size=L).tolist()
    y = discrete_target(kind, x)

    meta = {'task': kind, 'values': x, 'target_values': list(y)}
    if kind == 'noisy_copy':
        flips = rng.random(len(y)) < spec.noise_prob
        noise = rng.integers(spec.min_value, spec.max_value + 1, size=len(y))
        y = np.where(flips, noise, y).tolist()
        meta.update(target_values=y, flipped=flips.astype(int).tolist())
    return token_sample(to_tokens(x), to_tokens(y), vocab_for(spec.max_value), meta)


def generate_discrete(kind: str, spec: TaskSpec, index: int = 0) -> Sample:
    """one sample, a pure function of (kind, spec, index)"""
    return draw_discrete(kind, spec, sample_rng(spec.seed, index))
