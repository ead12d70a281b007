# memlab/ntm/model.py
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from controllers.cells import LstmCell, lstm_step
from core.autodiff import Tensor, concat, matmul, stack
from core.exceptions import ArgumentError
from core.losses import SequenceLossMixin
from core.nn import Linear, Module, init_param
from ntm.memory import (address_head, emission_size, flatten_reads, initial_memory,
                        parse_head_emission, read_slot, write_slot)

logger = logging.getLogger(__name__)


@dataclass
class NtmState:
    memory: Tensor
    h: Tensor
    c: Tensor
    write_weights: List[Tensor]
    read_weights: List[Tensor]
    reads: List[Tensor]


class NtmModel(SequenceLossMixin, Module):
    """
    lstm controller driving write heads then read heads over one shared slot memory.

    each head's raw emission is xi_n = h_t W^c_n (no bias), so the interface
    matrices can be swapped per step by a stored-program memory.
    """

    def __init__(self, input_size: int, output_size: int, rng: np.random.Generator,
                 hidden_size: int = 64, memory_slots: int = 16, word_size: int = 8,
                 read_heads: int = 1, write_heads: int = 1):
        if read_heads < 1 or write_heads < 1:
            raise ArgumentError("ntm needs at least one read and one write head")
        self.input_size = input_size
        self.output_size = output_size
        self.hidden_size = hidden_size
        self.memory_slots = memory_slots
        self.word_size = word_size
        self.read_heads = read_heads
        self.write_heads = write_heads

        self.controller = LstmCell(input_size + read_heads * word_size, hidden_size, rng)
        self.interface = [init_param(rng, self.interface_shape(n)) for n in range(self.num_heads)]
        self.output = Linear(hidden_size + read_heads * word_size, output_size, rng)

    @property
    def num_heads(self) -> int:
        return self.write_heads + self.read_heads

    def is_write_head(self, n: int) -> bool:
        return n < self.write_heads

    def interface_shape(self, n: int) -> Tuple[int, int]:
        return self.hidden_size, emission_size(self.word_size, self.is_write_head(n))

    def head_interface(self, n: int, h: Tensor, state: NtmState) -> Tensor:
        """raw emission for head n from controller output h"""
        return matmul(h, self.interface[n])

    def initial_state(self, batch: int) -> NtmState:
        h, c = self.controller.initial_state(batch)
        onehot = np.zeros((batch, self.memory_slots))
        onehot[:, 0] = 1.0
        return NtmState(
            memory=initial_memory(batch, self.memory_slots, self.word_size),
            h=h, c=c,
            write_weights=[Tensor(onehot.copy()) for _ in range(self.write_heads)],
            read_weights=[Tensor(onehot.copy()) for _ in range(self.read_heads)],
            reads=[Tensor(np.zeros((batch, self.word_size))) for _ in range(self.read_heads)],
        )

    def step(self, x: Tensor, state: NtmState) -> Tuple[Tensor, NtmState]:
        h, c = lstm_step(self.controller, concat([x] + state.reads, axis=-1), state.h, state.c)
        state = replace(state, h=h, c=c)

        memory = state.memory
        write_weights, read_weights, reads = [], [], []
        for n in range(self.num_heads):
            is_write = self.is_write_head(n)
            emit = parse_head_emission(self.head_interface(n, h, state), self.word_size, is_write)
            if is_write:
                w = address_head(memory, emit, state.write_weights[n])
                memory = write_slot(memory, w, emit.erase, emit.add)
                write_weights.append(w)
            else:
                k = n - self.write_heads
                w = address_head(memory, emit, state.read_weights[k])
                read_weights.append(w)
                reads.append(read_slot(memory, w))

        out = self.output(concat([h, flatten_reads(reads)], axis=-1))
        return out, NtmState(memory, h, c, write_weights, read_weights, reads)

    def forward(self, inputs: Tensor, state: Optional[NtmState] = None, **_) -> Tensor:
        """run over (B, T, in) and return (B, T, out) logits"""
        state = state or self.initial_state(inputs.shape[0])
        outputs = []
        for t in range(inputs.shape[1]):
            out, state = self.step(inputs[:, t, :], state)
            outputs.append(out)
        return stack(outputs, axis=1)
