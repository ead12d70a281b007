# memlab/programs/nutm.py
import logging
from typing import List, Tuple

import numpy as np

from core.autodiff import Tensor, matmul, reshape, softplus
from core.constants import GUMBEL_TEMPERATURE
from core.exceptions import ArgumentError
from core.losses import LossResult
from core.nn import Linear
from ntm.model import NtmModel, NtmState
from programs.program_memory import (ProgramMemory, ProgramQuery, annealed_total_loss,
                                     program_key_regularizers, program_lookup)

logger = logging.getLogger(__name__)


class NutmModel(NtmModel):
    """ntm whose per-head interface matrices are fetched from program memories every step"""

    def __init__(self, input_size: int, output_size: int, rng: np.random.Generator,
                 num_programs: int = 2, program_key_size: int = 8, hard: bool = False,
                 temperature: float = GUMBEL_TEMPERATURE, key_regularizer: bool = True,
                 orthogonal: bool = False, **ntm_kwargs):
        super().__init__(input_size, output_size, rng, **ntm_kwargs)
        self.interface = []
        self.key_regularizer = key_regularizer
        self.orthogonal = orthogonal
        self.program_key_size = program_key_size
        self.hard = hard
        self.temperature = temperature
        self.programs = [
            ProgramMemory(num_programs, program_key_size, int(np.prod(self.interface_shape(n))), rng)
            for n in range(self.num_heads)
        ]
        self.meta = [Linear(self.hidden_size, program_key_size + 1, rng) for _ in range(self.num_heads)]
        self._noise = np.random.default_rng(rng.integers(2 ** 32))
        self._trace: List[np.ndarray] = []

    def head_interface(self, n: int, h: Tensor, state: NtmState) -> Tensor:
        """xi = c_t W^c_{t,n} with W^c_{t,n} looked up from program memory n"""
        query = self.meta[n](h)
        k = self.program_key_size
        result = program_lookup(
            self.programs[n],
            ProgramQuery(query[:, :k], softplus(query[:, k:k + 1])),
            hard=self.hard, temperature=self.temperature, rng=self._noise,
        )
        if n == 0:
            self._trace.append(np.zeros((self.num_heads,) + result.attn.shape))
        self._trace[-1][n] = result.attn.data

        batch = h.shape[0]
        rows, cols = self.interface_shape(n)
        weights = reshape(result.program, (batch, rows, cols))
        return reshape(matmul(reshape(h, (batch, 1, rows)), weights), (batch, cols))

    def regularizer(self, orthogonal: bool = False) -> Tensor:
        total = None
        for pm in self.programs:
            l_p, l_p2 = program_key_regularizers(pm, orthogonal)
            term = l_p if l_p2 is None else l_p + l_p2
            total = term if total is None else total + term
        return total

    def reset_trace(self):
        self._trace = []

    @property
    def program_trace(self) -> np.ndarray:
        """(steps, heads, batch, programs) attention history"""
        return np.stack(self._trace) if self._trace else np.zeros((0, self.num_heads, 0, 0))

    def forward(self, inputs: Tensor, state: NtmState = None, **kwargs) -> Tensor:
        self.reset_trace()
        return super().forward(inputs, state, **kwargs)

    def loss_on_batch(self, batch, schedule=None, step: int = 0) -> LossResult:
        """prediction loss plus the annealed key regulariser"""
        result = super().loss_on_batch(batch, schedule=schedule, step=step)
        if not self.key_regularizer:
            return result
        return LossResult(annealed_total_loss(result.loss, self.regularizer(self.orthogonal), step), result.predictions)


def nutm_step(core: NutmModel, programs: List[ProgramMemory], x: Tensor,
              state: NtmState) -> Tuple[NtmState, Tensor]:
    """one controller step with program-fetched interfaces; returns (state, outputs)"""
    if len(programs) != core.num_heads:
        raise ArgumentError(f"{len(programs)} program memories for {core.num_heads} heads")
    saved = core.programs
    core.programs = list(programs)
    try:
        out, state = core.step(x, state)
    finally:
        core.programs = saved
    return state, out
