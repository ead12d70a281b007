# memlab/ntm/memory.py
"""
ntm slot memory: content + location addressing, erase/add writes, weighted reads.

memories are batched tensors of shape (B, N, W); weights are (B, N).
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from core.autodiff import (Tensor, concat, cosine_similarity, log, matmul, reshape, roll,
                           softmax, softmax_with_strength, softplus, sigmoid)
from core.constants import LOG_EPS, MEMORY_INIT_VALUE, SHIFT_OFFSETS
from core.exceptions import ArgumentError
from core.validators.tensor_validators import validate_last_dim, validate_unit_interval

logger = logging.getLogger(__name__)


@dataclass
class NtmHeadEmission:
    """squashed interface values for one head"""
    key: Tensor
    beta: Tensor
    gate: Tensor
    shift: Tensor
    gamma: Tensor
    erase: Optional[Tensor] = None
    add: Optional[Tensor] = None

    @property
    def is_write(self) -> bool:
        return self.erase is not None


@dataclass
class SlotWrite:
    """a resolved write: address weights plus erase and add vectors"""
    weights: Tensor
    erase: Tensor
    add: Tensor


def head_layout(word_size: int, write: bool) -> List[Tuple[str, int]]:
    """interface table for one head, in emission order"""
    layout = [('key', word_size), ('beta', 1), ('gate', 1), ('shift', len(SHIFT_OFFSETS)), ('gamma', 1)]
    if write:
        layout += [('erase', word_size), ('add', word_size)]
    return layout


def emission_size(word_size: int, write: bool) -> int:
    return sum(size for _, size in head_layout(word_size, write))


def parse_head_emission(raw: Tensor, word_size: int, write: bool) -> NtmHeadEmission:
    """split a (B, E) controller emission and squash each field into its valid range"""
    validate_last_dim(raw, emission_size(word_size, write), 'head emission')
    fields = {}
    offset = 0
    for name, size in head_layout(word_size, write):
        fields[name] = raw[:, offset:offset + size]
        offset += size

    return NtmHeadEmission(
        key=fields['key'],
        beta=softplus(fields['beta']),
        gate=sigmoid(fields['gate']),
        shift=softmax(fields['shift'], axis=-1),
        gamma=1.0 + softplus(fields['gamma']),
        erase=sigmoid(fields['erase']) if write else None,
        add=fields['add'] if write else None,
    )


def initial_memory(batch: int, slots: int, word_size: int) -> Tensor:
    return Tensor(np.full((batch, slots, word_size), MEMORY_INIT_VALUE))


def content_weights(mem: Tensor, key: Tensor, beta: Tensor) -> Tuple[Tensor, np.ndarray]:
    """softmax(beta * cos(key, M(i))) over slots"""
    batch, _, width = mem.shape
    similarity, degenerate = cosine_similarity(mem, reshape(key, (batch, 1, width)))
    return softmax_with_strength(similarity, beta), degenerate


def address_head(mem: Tensor, emit: NtmHeadEmission, w_prev: Tensor) -> Tensor:
    """content -> gate -> circular shift -> sharpen"""
    if np.any(emit.gamma.data < 1):
        raise ArgumentError("sharpening gamma must be >= 1")

    w_content, _ = content_weights(mem, emit.key, emit.beta)
    w_gated = emit.gate * w_content + (1.0 - emit.gate) * w_prev

    w_shifted = None
    for k, offset in enumerate(SHIFT_OFFSETS):
        term = emit.shift[:, k:k + 1] * roll(w_gated, offset, axis=-1)
        w_shifted = term if w_shifted is None else w_shifted + term

    # w^gamma / sum(w^gamma) in log space
    return softmax(emit.gamma * log(w_shifted + LOG_EPS), axis=-1)


def write_slot(mem: Tensor, w: Tensor, e: Tensor, v: Tensor) -> Tensor:
    """M(i) <- M(i) * (1 - w(i) e) + w(i) v"""
    validate_unit_interval(e, 'erase vector')
    batch, slots, width = mem.shape
    w_col = reshape(w, (batch, slots, 1))
    erase = matmul(w_col, reshape(e, (batch, 1, width)))
    add = matmul(w_col, reshape(v, (batch, 1, width)))
    return mem * (1.0 - erase) + add


def read_slot(mem: Tensor, w: Tensor) -> Tensor:
    """r = sum_i w(i) M(i)"""
    batch, slots, width = mem.shape
    return reshape(matmul(reshape(w, (batch, 1, slots)), mem), (batch, width))


def apply_slot_write(mem: Tensor, write: SlotWrite) -> Tensor:
    return write_slot(mem, write.weights, write.erase, write.add)


def flatten_reads(reads: List[Tensor]) -> Tensor:
    return reads[0] if len(reads) == 1 else concat(reads, axis=-1)
