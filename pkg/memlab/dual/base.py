# memlab/dual/base.py
"""pieces shared by the dual-process encoder-decoders and their single-controller baselines"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from core.autodiff import Tensor
from core.exceptions import ArgumentError
from core.losses import masked_cross_entropy


@dataclass
class Seq2SeqRun:
    tokens: np.ndarray                      # (B, decode_len) argmax predictions
    logits: List[Tensor]
    loss: Optional[Tensor] = None
    memory_snapshots: List[np.ndarray] = field(default_factory=list, repr=False)


def as_token_batch(seq, label: str = 'input') -> np.ndarray:
    """(L,) or (B, L) token ids -> (B, L) ints; empty sequences are rejected"""
    tokens = np.asarray(seq, dtype=int)
    if tokens.ndim == 1:
        tokens = tokens.reshape(1, -1)
    if tokens.ndim != 2 or tokens.shape[1] == 0:
        raise ArgumentError(f"{label} sequence must be nonempty")
    return tokens


def step_cross_entropy(logits: Tensor, targets: np.ndarray, vocab_size: int) -> Tensor:
    """-sum_b log p(y_b) for one decoding step, targets (B,) ids"""
    onehot = np.zeros((targets.shape[0], vocab_size))
    onehot[np.arange(targets.shape[0]), targets] = 1.0
    return masked_cross_entropy(logits, onehot, np.ones(targets.shape[0])) * float(targets.shape[0])


def argmax_tokens(logits: Tensor) -> np.ndarray:
    """ties go to the lowest index"""
    return np.argmax(logits.data, axis=-1)
