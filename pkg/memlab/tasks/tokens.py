# memlab/tasks/tokens.py
"""
value <-> token id mapping shared by the token tasks.

ids 0 and 1 are reserved for the separator and the empty marker, so a task
value v is token v + 2.
"""
from typing import Any, Dict, Sequence

import numpy as np

from core.constants import EMPTY_ID, SEPARATOR_ID
from tasks.sample import Sample, one_hot_rows

TOKEN_OFFSET = 2


def to_tokens(values: Sequence[int]) -> np.ndarray:
    return np.asarray(values, dtype=int) + TOKEN_OFFSET


def from_tokens(tokens: Sequence[int]) -> np.ndarray:
    """reserved ids decode to -1"""
    tokens = np.asarray(tokens, dtype=int)
    return np.where(tokens >= TOKEN_OFFSET, tokens - TOKEN_OFFSET, -1)


def vocab_for(max_value: int) -> int:
    return int(max_value) + TOKEN_OFFSET + 1


def token_sample(input_tokens: Sequence[int], target_tokens: Sequence[int], vocab_size: int,
                 meta: Dict[str, Any]) -> Sample:
    """
    step-aligned layout: the input tokens one-hot, then one step per output
    with only the go channel (the last input channel) set.
    """
    input_tokens = np.asarray(input_tokens, dtype=int)
    target_tokens = np.asarray(target_tokens, dtype=int)
    L, K = len(input_tokens), len(target_tokens)
    steps = L + K

    inputs = np.zeros((steps, vocab_size + 1))
    inputs[:L, :vocab_size] = one_hot_rows(input_tokens, vocab_size)
    inputs[L:, vocab_size] = 1.0

    targets = np.zeros((steps, vocab_size))
    targets[L:] = one_hot_rows(target_tokens, vocab_size)
    mask = np.zeros(steps)
    mask[L:] = 1.0

    meta = dict(meta, input_tokens=input_tokens.tolist(), target_tokens=target_tokens.tolist(),
                vocab_size=vocab_size, separator_id=SEPARATOR_ID, empty_id=EMPTY_ID)
    return Sample(inputs, targets, mask, 'tokens', meta)
