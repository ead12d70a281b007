# memlab/dnc/model.py
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from controllers.cells import LstmCell, lstm_step
from core.autodiff import Tensor, concat, stack
from core.exceptions import ArgumentError
from core.losses import SequenceLossMixin
from core.nn import Linear, Module
from dnc.memory import DncAccess, DncEmission, DncState
from scheduling.cache import Cache, cuw_step
from scheduling.schedules import WritePolicy, WriteSchedule

logger = logging.getLogger(__name__)


@dataclass
class DncModelState:
    memory: DncState
    h: Tensor
    c: Tensor
    reads: Tensor


class _CuwHooks:
    """adapts a DncModel to the controller/write/read hooks of cuw_step"""

    def __init__(self, model: 'DncModel', state: DncModelState):
        self.model = model
        self.state = state
        self._emission: Optional[DncEmission] = None

    def controller_step(self, x: Tensor, h_prev: Tensor, r_prev: Tensor) -> Tensor:
        h, c = lstm_step(self.model.controller, concat([x, r_prev], axis=-1), h_prev, self.state.c)
        self.state = replace(self.state, h=h, c=c)
        return h

    def memory_write(self, h: Tensor) -> None:
        self._emission = self.model.access.emit(h)
        self.model._write_trace.append(self._emission.write_gate.data.copy())
        self.state = replace(self.state, memory=self.model.access.write(self.state.memory, self._emission))

    def memory_read(self, h: Tensor) -> Tensor:
        emission = self._emission or self.model.access.emit(h)
        reads, memory = self.model.access.read(self.state.memory, emission)
        self.state = replace(self.state, memory=memory, reads=reads)
        return reads


class DncModel(SequenceLossMixin, Module):
    """lstm controller + dnc access; writes follow an optional WriteSchedule"""

    def __init__(self, input_size: int, output_size: int, rng: np.random.Generator,
                 hidden_size: int = 64, memory_slots: int = 16, word_size: int = 8,
                 read_heads: int = 1, link_enabled: bool = True, cache_size: Optional[int] = None,
                 attn_size: int = 32):
        self.input_size = input_size
        self.output_size = output_size
        self.hidden_size = hidden_size
        self.access = DncAccess(hidden_size, rng, memory_slots, word_size, read_heads, link_enabled)
        self.controller = LstmCell(input_size + self.access.read_size, hidden_size, rng)
        self.output = Linear(hidden_size + self.access.read_size, output_size, rng)
        self.cache = Cache(cache_size, hidden_size, self.access.read_size, rng, attn_size) if cache_size else None
        self._write_trace: List[np.ndarray] = []

    def initial_state(self, batch: int) -> DncModelState:
        h, c = self.controller.initial_state(batch)
        return DncModelState(self.access.initial_state(batch), h, c,
                             Tensor(np.zeros((batch, self.access.read_size))))

    def step(self, x: Tensor, state: DncModelState, write: bool = True) -> Tuple[Tensor, DncModelState]:
        h, c = lstm_step(self.controller, concat([x, state.reads], axis=-1), state.h, state.c)
        reads, memory, emission = self.access.step(state.memory, h, write=write)
        if write:
            self._write_trace.append(emission.write_gate.data.copy())
        out = self.output(concat([h, reads], axis=-1))
        return out, DncModelState(memory, h, c, reads)

    def cached_step(self, x: Tensor, state: DncModelState, t: int,
                    write: Optional[bool] = None) -> Tuple[Tensor, DncModelState, bool]:
        hooks = _CuwHooks(self, state)
        h, r, wrote = cuw_step(self.cache, state.h, state.reads, x, t, hooks, write=write)
        state = replace(hooks.state, h=h, reads=r)
        return self.output(concat([h, r], axis=-1)), state, wrote

    @property
    def write_gate_trace(self) -> List[np.ndarray]:
        return list(self._write_trace)

    def forward(self, inputs: Tensor, schedule: Optional[WriteSchedule] = None,
                state: Optional[DncModelState] = None, **_) -> Tensor:
        """
        run over (B, T, in). without a schedule every step writes; with one, the
        first schedule.T steps write on the schedule and later steps only read.
        a cached_uniform schedule sizes the cache to its interval L.
        """
        state = state or self.initial_state(inputs.shape[0])
        self._write_trace = []
        use_cache = schedule is not None and schedule.policy == WritePolicy.CACHED_UNIFORM
        if use_cache:
            if self.cache is None:
                raise ArgumentError("cached_uniform writing needs a model built with cache_size")
            self.cache.resize(schedule.interval or min(schedule.steps, default=schedule.T))
            self.cache.clear()

        outputs = []
        for t in range(1, inputs.shape[1] + 1):
            x = inputs[:, t - 1, :]
            if use_cache and t <= schedule.T:
                out, state, _ = self.cached_step(x, state, t, write=schedule.writes_at(t))
            else:
                write = schedule is None or schedule.writes_at(t)
                out, state = self.step(x, state, write=write)
            outputs.append(out)
        return stack(outputs, axis=1)
