# memlab/classic/neural_stack.py
"""continuous stack: values are only appended, strengths decide what is visible"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.exceptions import ArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NeuralStackState:
    V: np.ndarray     # (t, m) pushed values, rows never change
    s: np.ndarray     # (t,) strengths

    @classmethod
    def empty(cls, value_size: int) -> 'NeuralStackState':
        return cls(np.zeros((0, value_size)), np.zeros(0))

    @property
    def value_size(self) -> int:
        return self.V.shape[1]


def stack_read(V: np.ndarray, s: np.ndarray) -> np.ndarray:
    """r = sum_i min(s_i, max(0, 1 - sum_{j>i} s_j)) v_i"""
    above = np.concatenate([np.cumsum(s[::-1])[::-1][1:], [0.0]]) if len(s) else s
    weights = np.minimum(s, np.maximum(0.0, 1.0 - above))
    return weights @ V if len(s) else np.zeros(V.shape[1])


def neural_stack_step(state: NeuralStackState, d: float, u: float, v: np.ndarray) -> Tuple[NeuralStackState, np.ndarray]:
    """pop strength u is taken from the top down, then v is pushed with strength d"""
    if not (0 <= d <= 1 and 0 <= u <= 1):
        raise ArgumentError("push and pop signals must lie in [0, 1]")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (state.value_size,):
        raise ArgumentError(f"value must have size {state.value_size}")

    s_prev = state.s
    above = np.concatenate([np.cumsum(s_prev[::-1])[::-1][1:], [0.0]]) if len(s_prev) else s_prev
    kept = np.maximum(0.0, s_prev - np.maximum(0.0, u - above))
    s = np.append(kept, float(d))
    V = np.vstack([state.V, v[None, :]])
    return NeuralStackState(V, s), stack_read(V, s)


class DiscreteStack:
    """plain list stack; pop happens before push, reading an empty stack gives zeros"""

    def __init__(self, value_size: int):
        self.value_size = value_size
        self.items: List[np.ndarray] = []

    def step(self, push: bool, pop: bool, v: np.ndarray) -> np.ndarray:
        if pop and self.items:
            self.items.pop()
        if push:
            self.items.append(np.asarray(v, dtype=np.float64))
        return self.items[-1].copy() if self.items else np.zeros(self.value_size)
