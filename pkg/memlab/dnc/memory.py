# memlab/dnc/memory.py
"""
dnc memory: usage-based allocation, temporal linkage and three-mode reads.

interface table (emission order, R read heads, word size W):

    read_keys        R*W   raw
    read_strengths   R     softplus
    write_key        W     raw
    write_strength   1     softplus
    erase            W     sigmoid
    write_vector     W     raw
    free_gates       R     sigmoid
    allocation_gate  1     sigmoid
    write_gate       1     sigmoid
    read_modes       3*R   softmax per head over (backward, content, forward)
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from core.autodiff import (Tensor, cosine_similarity, cumprod_exclusive, matmul, permute_last,
                           reshape, sigmoid, softmax, softmax_with_strength, softplus, swap_last)
from core.constants import MEMORY_INIT_VALUE, READ_MODES
from core.nn import Linear, Module
from core.validators.tensor_validators import validate_last_dim, validate_unit_interval

logger = logging.getLogger(__name__)


@dataclass
class DncState:
    """batched dnc memory state; weights are (B, N) and (B, R, N)"""
    memory: Tensor
    usage: Tensor
    precedence: Tensor
    link: Tensor
    write_weight: Tensor
    read_weights: Tensor

    @property
    def slots(self) -> int:
        return self.memory.shape[1]


@dataclass
class DncEmission:
    read_keys: Tensor          # (B, R, W)
    read_strengths: Tensor     # (B, R, 1)
    write_key: Tensor          # (B, W)
    write_strength: Tensor     # (B, 1)
    erase: Tensor              # (B, W)
    write_vector: Tensor       # (B, W)
    free_gates: Tensor         # (B, R)
    allocation_gate: Tensor    # (B, 1)
    write_gate: Tensor         # (B, 1)
    read_modes: Tensor         # (B, R, 3)


def interface_layout(word_size: int, read_heads: int) -> List[Tuple[str, int]]:
    R, W = read_heads, word_size
    return [
        ('read_keys', R * W), ('read_strengths', R),
        ('write_key', W), ('write_strength', 1),
        ('erase', W), ('write_vector', W),
        ('free_gates', R), ('allocation_gate', 1), ('write_gate', 1),
        ('read_modes', len(READ_MODES) * R),
    ]


def interface_size(word_size: int, read_heads: int) -> int:
    return sum(size for _, size in interface_layout(word_size, read_heads))


def parse_dnc_emission(raw: Tensor, word_size: int, read_heads: int) -> DncEmission:
    validate_last_dim(raw, interface_size(word_size, read_heads), 'dnc interface')
    batch = raw.shape[0]
    fields = {}
    offset = 0
    for name, size in interface_layout(word_size, read_heads):
        fields[name] = raw[:, offset:offset + size]
        offset += size

    return DncEmission(
        read_keys=reshape(fields['read_keys'], (batch, read_heads, word_size)),
        read_strengths=reshape(softplus(fields['read_strengths']), (batch, read_heads, 1)),
        write_key=fields['write_key'],
        write_strength=softplus(fields['write_strength']),
        erase=sigmoid(fields['erase']),
        write_vector=fields['write_vector'],
        free_gates=sigmoid(fields['free_gates']),
        allocation_gate=sigmoid(fields['allocation_gate']),
        write_gate=sigmoid(fields['write_gate']),
        read_modes=softmax(reshape(fields['read_modes'], (batch, read_heads, len(READ_MODES))), axis=-1),
    )


def initial_dnc_state(batch: int, slots: int, word_size: int, read_heads: int) -> DncState:
    return DncState(
        memory=Tensor(np.full((batch, slots, word_size), MEMORY_INIT_VALUE)),
        usage=Tensor(np.zeros((batch, slots))),
        precedence=Tensor(np.zeros((batch, slots))),
        link=Tensor(np.zeros((batch, slots, slots))),
        write_weight=Tensor(np.zeros((batch, slots))),
        read_weights=Tensor(np.zeros((batch, read_heads, slots))),
    )


def allocation_step(state: DncState, emission: DncEmission) -> Tuple[Tensor, Tensor]:
    """usage update and allocation weighting; the sort order is a constant for backward"""
    read_heads = state.read_weights.shape[1]
    retention = None
    for k in range(read_heads):
        term = 1.0 - emission.free_gates[:, k:k + 1] * state.read_weights[:, k, :]
        retention = term if retention is None else retention * term

    u, ww_prev = state.usage, state.write_weight
    usage = (u + ww_prev - u * ww_prev) * retention

    order = np.argsort(usage.data, axis=-1, kind='stable')
    sorted_usage = permute_last(usage, order)
    sorted_alloc = (1.0 - sorted_usage) * cumprod_exclusive(sorted_usage)
    alloc = permute_last(sorted_alloc, np.argsort(order, axis=-1, kind='stable'))
    return usage, alloc


def write_weighting(state: DncState, emission: DncEmission, alloc: Tensor) -> Tensor:
    """w^w = g^w [g^a a + (1 - g^a) c^w]"""
    batch, _, width = state.memory.shape
    similarity, _ = cosine_similarity(state.memory, reshape(emission.write_key, (batch, 1, width)))
    content = softmax_with_strength(similarity, emission.write_strength)
    g_a = emission.allocation_gate
    return emission.write_gate * (g_a * alloc + (1.0 - g_a) * content)


def apply_write(state: DncState, write_weight: Tensor, erase: Tensor, write_vector: Tensor,
                usage: Tensor = None, link_enabled: bool = True) -> DncState:
    """memory, link and precedence update for a resolved write weighting"""
    validate_unit_interval(erase, 'erase vector')
    batch, slots, width = state.memory.shape
    w_col = reshape(write_weight, (batch, slots, 1))
    memory = (state.memory * (1.0 - matmul(w_col, reshape(erase, (batch, 1, width))))
              + matmul(w_col, reshape(write_vector, (batch, 1, width))))

    link = state.link
    if link_enabled:
        w_row = reshape(write_weight, (batch, 1, slots))
        p_row = reshape(state.precedence, (batch, 1, slots))
        link = (1.0 - w_col - w_row) * state.link + matmul(w_col, p_row)
        link = link * (1.0 - np.eye(slots))

    precedence = (1.0 - write_weight.sum(axis=-1, keepdims=True)) * state.precedence + write_weight
    return replace(state, memory=memory, link=link, precedence=precedence,
                   write_weight=write_weight, usage=state.usage if usage is None else usage)


def write_step(state: DncState, emission: DncEmission, link_enabled: bool = True) -> DncState:
    usage, alloc = allocation_step(state, emission)
    write_weight = write_weighting(state, emission, alloc)
    return apply_write(state, write_weight, emission.erase, emission.write_vector,
                       usage=usage, link_enabled=link_enabled)


def read_weighting(memory: Tensor, link: Tensor, read_weights_prev: Tensor,
                   emission: DncEmission) -> Tensor:
    """pi_1 L^T w + pi_2 c + pi_3 L w for every read head"""
    batch, slots, width = memory.shape
    read_heads = read_weights_prev.shape[1]
    similarity, _ = cosine_similarity(reshape(memory, (batch, 1, slots, width)),
                                      reshape(emission.read_keys, (batch, read_heads, 1, width)))
    content = softmax_with_strength(similarity, emission.read_strengths)

    forward = matmul(read_weights_prev, swap_last(link))
    backward = matmul(read_weights_prev, link)
    modes = emission.read_modes
    return modes[:, :, 0:1] * backward + modes[:, :, 1:2] * content + modes[:, :, 2:3] * forward


def read_step(state: DncState, emission: DncEmission) -> Tuple[Tensor, DncState]:
    """returns reads (B, R, W) and the state with updated read weights"""
    read_weights = read_weighting(state.memory, state.link, state.read_weights, emission)
    reads = matmul(read_weights, state.memory)
    return reads, replace(state, read_weights=read_weights)


class DncAccess(Module):
    """interface layer from controller output to emission, plus the memory step"""

    def __init__(self, controller_size: int, rng: np.random.Generator, memory_slots: int = 16,
                 word_size: int = 8, read_heads: int = 1, link_enabled: bool = True):
        self.memory_slots = memory_slots
        self.word_size = word_size
        self.read_heads = read_heads
        self.link_enabled = link_enabled
        self.interface = Linear(controller_size, interface_size(word_size, read_heads), rng)

    @property
    def read_size(self) -> int:
        return self.read_heads * self.word_size

    def initial_state(self, batch: int) -> DncState:
        return initial_dnc_state(batch, self.memory_slots, self.word_size, self.read_heads)

    def emit(self, controller_out: Tensor) -> DncEmission:
        return parse_dnc_emission(self.interface(controller_out), self.word_size, self.read_heads)

    def write(self, state: DncState, emission: DncEmission) -> DncState:
        return write_step(state, emission, link_enabled=self.link_enabled)

    def read(self, state: DncState, emission: DncEmission) -> Tuple[Tensor, DncState]:
        reads, state = read_step(state, emission)
        return reshape(reads, (reads.shape[0], self.read_size)), state

    def step(self, state: DncState, controller_out: Tensor, write: bool = True) -> Tuple[Tensor, DncState, DncEmission]:
        """optional write, then read; reads come back flattened (B, R*W)"""
        emission = self.emit(controller_out)
        if write:
            state = self.write(state, emission)
        reads, state = self.read(state, emission)
        return reads, state, emission
