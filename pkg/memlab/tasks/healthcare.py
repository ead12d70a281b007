# memlab/tasks/healthcare.py
"""synthetic stand-ins for the medical sequence tasks: odd-even prediction and sum of two sequences"""
import logging
from typing import List, Sequence

import numpy as np

from core.constants import SEPARATOR_ID
from core.exceptions import ArgumentError
from tasks.sample import Sample, sample_rng
from tasks.specs import FAMILIES, TaskSpec
from tasks.tokens import to_tokens, token_sample, vocab_for

logger = logging.getLogger(__name__)

HEALTHCARE_KINDS = FAMILIES['healthcare']


def odd_even_target(x: Sequence[int]) -> List[int]:
    """y_n = 2 x_n for the first half, then y_n = y_{n-1} + 2; the first half keeps at least one item"""
    half = max(1, len(x) // 2)
    y: List[int] = []
    for n, value in enumerate(x):
        y.append(2 * value if n < half else y[-1] + 2)
    return y


def sum_target(x1: Sequence[int], x2: Sequence[int]) -> List[int]:
    """y_i = x1_i + x2_{L+1-i}"""
    if len(x1) != len(x2):
        raise ArgumentError("both views must have the same length")
    return [a + b for a, b in zip(x1, reversed(list(x2)))]


def odd_even_vocab(spec: TaskSpec) -> int:
    largest = 2 * spec.max_value + 2 * (spec.max_length - max(1, spec.max_length // 2))
    return vocab_for(largest)


def _odd_even(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    odds = np.arange(spec.min_value | 1, spec.max_value + 1, 2)
    L = int(rng.integers(spec.min_length, spec.max_length + 1))
    if L > len(odds):
        raise ArgumentError(f"cannot draw {L} distinct odd numbers from [{spec.min_value}, {spec.max_value}]")
    x = rng.choice(odds, size=L, replace=False).tolist()
    y = odd_even_target(x)
    return token_sample(to_tokens(x), to_tokens(y), odd_even_vocab(spec),
                        {'task': 'odd_even', 'values': x, 'target_values': y})


def _sum_two_sequences(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    """the single-stream input is x1, separator, x2; meta keeps both views for the dual models"""
    L = int(rng.integers(spec.min_length, spec.max_length + 1))
    x1 = rng.integers(spec.min_value, spec.max_value + 1, size=L).tolist()
    x2 = rng.integers(spec.min_value, spec.max_value + 1, size=L).tolist()
    y = sum_target(x1, x2)
    t1, t2 = to_tokens(x1), to_tokens(x2)
    stream = np.concatenate([t1, [SEPARATOR_ID], t2])
    sample = token_sample(stream, to_tokens(y), vocab_for(2 * spec.max_value),
                          {'task': 'sum_two_sequences', 'values': [x1, x2], 'target_values': y})
    sample.meta['views'] = [t1.tolist(), t2.tolist()]
    return sample


BUILDERS = {'odd_even': _odd_even, 'sum_two_sequences': _sum_two_sequences}


def draw_healthcare(kind: str, spec: TaskSpec, rng: np.random.Generator) -> Sample:
    if kind not in BUILDERS:
        raise ArgumentError(f"unknown healthcare task {kind}, expected one of {HEALTHCARE_KINDS}")
    return BUILDERS[kind](spec.for_kind(kind, 'healthcare'), rng)


def generate_healthcare_synthetic(kind: str, spec: TaskSpec, index: int = 0) -> Sample:
    return draw_healthcare(kind, spec, sample_rng(spec.seed, index))
