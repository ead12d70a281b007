# memlab/scheduling/cache.py
"""cached uniform writing: a bounded buffer of controller states and local attention over it"""
import logging
from typing import List, Optional, Protocol, Tuple

import numpy as np

from controllers.attention import BahdanauAttention, bahdanau_attention
from core.autodiff import Tensor, stack
from core.exceptions import ArgumentError
from core.nn import Module

logger = logging.getLogger(__name__)


class MannHooks(Protocol):
    """what a memory-augmented model exposes to cuw_step"""

    def controller_step(self, x: Tensor, h_prev: Tensor, r_prev: Tensor) -> Tensor: ...

    def memory_write(self, h: Tensor) -> None: ...

    def memory_read(self, h: Tensor) -> Tensor: ...


class Cache(Module):
    """holds up to `capacity` hidden states; attention params W, U, V, v"""

    def __init__(self, capacity: int, hidden_size: int, read_size: int, rng: np.random.Generator,
                 attn_size: int = 32):
        if capacity < 1:
            raise ArgumentError("cache capacity must be >= 1")
        self.capacity = capacity
        self.attention = BahdanauAttention(hidden_size, hidden_size, attn_size, rng, extra_size=read_size)
        self._buffer: List[Tensor] = []
        self._last_alpha: Optional[Tensor] = None

    def __len__(self):
        return len(self._buffer)

    @property
    def buffer(self) -> List[Tensor]:
        return list(self._buffer)

    def append(self, h: Tensor):
        if len(self._buffer) == self.capacity:
            self._buffer.pop(0)
        self._buffer.append(h)

    def clear(self):
        self._buffer = []

    def resize(self, capacity: int):
        """set L for the next sequence; the attention parameters do not depend on it"""
        if capacity < 1:
            raise ArgumentError("cache capacity must be >= 1")
        self.capacity = capacity
        self._buffer = self._buffer[-capacity:]

    def attend(self, h_prev: Tensor, r_prev: Tensor) -> Tensor:
        """a_t = sum_j alpha_j d_j with alpha = softmax(v^T tanh(W h + U d_j + V r))"""
        states = stack(self._buffer, axis=1)
        context, alpha = bahdanau_attention(self.attention, h_prev, states, extra=r_prev)
        self._last_alpha = alpha
        return context


def cuw_step(cache: Cache, h_prev: Tensor, r_prev: Tensor, x: Tensor, t: int,
             hooks: MannHooks, write: Optional[bool] = None) -> Tuple[Tensor, Tensor, bool]:
    """
    one cached-uniform-writing step; reads are frozen between writes.

    the cache flushes when t is a multiple of its capacity L, or when `write`
    says so (a schedule's writes_at(t)).
    """
    cache.append(h_prev)
    if write is None:
        write = t % cache.capacity == 0
    if write:
        a_t = cache.attend(h_prev, r_prev)
        h = hooks.controller_step(x, a_t, r_prev)
        hooks.memory_write(h)
        r = hooks.memory_read(h)
        cache.clear()
        return h, r, True

    h = hooks.controller_step(x, h_prev, r_prev)
    return h, r_prev, False
