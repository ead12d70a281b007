# memlab/tasks/ntm_tasks.py
"""
binary-vector algorithmic tasks.

input rows carry the data bits plus two delimiter channels: channel `bits`
marks the start of input, channel `bits + 1` marks the start of the answer
(repeat copy puts the repeat count there). priority sort adds a priority
channel after the delimiters. answer steps have all-zero input.
"""
import logging
from typing import Tuple

import numpy as np

from core.exceptions import ArgumentError
from tasks.sample import Sample, sample_rng
from tasks.specs import FAMILIES, TaskSpec

logger = logging.getLogger(__name__)

NTM_KINDS = FAMILIES['ntm']


def _random_bits(rng: np.random.Generator, rows: int, bits: int) -> np.ndarray:
    return rng.integers(0, 2, size=(rows, bits)).astype(np.float64)


def _answer_block(inputs: np.ndarray, answer: np.ndarray, out_width: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """append |answer| blank input steps; the answer is scored on exactly those steps"""
    n_in, n_out = inputs.shape[0], answer.shape[0]
    full_inputs = np.vstack([inputs, np.zeros((n_out, inputs.shape[1]))])
    targets = np.zeros((n_in + n_out, out_width))
    targets[n_in:, :answer.shape[1]] = answer
    mask = np.zeros(n_in + n_out)
    mask[n_in:] = 1.0
    return full_inputs, targets, mask


def _copy(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    bits = spec.bits
    L = int(rng.integers(spec.min_length, spec.max_length + 1))
    items = _random_bits(rng, L, bits)
    inputs = np.zeros((L + 2, bits + 2))
    inputs[0, bits] = 1.0
    inputs[1:L + 1, :bits] = items
    inputs[L + 1, bits + 1] = 1.0
    x, y, mask = _answer_block(inputs, items, bits)
    return Sample(x, y, mask, 'bits', {'task': spec.kind, 'length': L, 'items': items})


def _repeat_copy(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    """the answer repeats the items n times then raises the end-marker channel"""
    bits = spec.bits
    L = int(rng.integers(spec.min_length, spec.max_length + 1))
    items = _random_bits(rng, L, bits)
    n = int(rng.integers(spec.min_repeats, spec.max_repeats + 1))
    inputs = np.zeros((L + 2, bits + 2))
    inputs[0, bits] = 1.0
    inputs[1:L + 1, :bits] = items
    inputs[L + 1, bits + 1] = float(n)

    answer = np.zeros((L * n + 1, bits + 1))
    answer[:L * n, :bits] = np.tile(items, (n, 1))
    answer[-1, bits] = 1.0
    x, y, mask = _answer_block(inputs, answer, bits + 1)
    return Sample(x, y, mask, 'bits', {'task': 'repeat_copy', 'length': L, 'repeats': n, 'items': items})


def _distinct_items(rng: np.random.Generator, count: int, rows: int, bits: int) -> np.ndarray:
    """(count, rows, bits) with no two items equal"""
    items = _random_bits(rng, count * rows, bits).reshape(count, rows, bits)
    for i in range(count):
        while any(np.array_equal(items[i], items[j]) for j in range(i)):
            items[i] = _random_bits(rng, rows, bits)
    return items


def _assoc_recall(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    """k items, each after a start delimiter; a query item between answer delimiters; answer = the item after it"""
    bits, rows = spec.bits, spec.item_length
    k = int(rng.integers(spec.min_items, spec.max_items + 1))
    items = _distinct_items(rng, k, rows, bits)
    q = int(rng.integers(0, k - 1))

    blocks = []
    for item in items:
        delim = np.zeros((1, bits + 2))
        delim[0, bits] = 1.0
        blocks.extend([delim, np.hstack([item, np.zeros((rows, 2))])])
    query_delim = np.zeros((1, bits + 2))
    query_delim[0, bits + 1] = 1.0
    blocks.extend([query_delim, np.hstack([items[q], np.zeros((rows, 2))]), query_delim])
    x, y, mask = _answer_block(np.vstack(blocks), items[q + 1], bits)
    return Sample(x, y, mask, 'bits', {'task': 'assoc_recall', 'num_items': k, 'query_index': q,
                                       'items': items})


def ngram_table(rng: np.random.Generator, order: int) -> np.ndarray:
    """P(next bit = 1 | previous order-1 bits), one Beta(1/2, 1/2) draw per context"""
    return rng.beta(0.5, 0.5, size=2 ** (order - 1))


def _context_index(history: np.ndarray) -> int:
    return int(history.astype(int) @ (1 << np.arange(len(history))[::-1]))


def _dyn_ngrams(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    """a fresh table per sample; the target at step t is bit t+1"""
    context = spec.ngram_order - 1
    table = ngram_table(rng, spec.ngram_order)
    L = int(rng.integers(spec.min_length, spec.max_length + 1))
    if L <= context:
        raise ArgumentError(f"dyn_ngrams needs length > {context}")
    seq = np.zeros(L)
    seq[:context] = rng.integers(0, 2, size=context)
    for t in range(context, L):
        seq[t] = float(rng.random() < table[_context_index(seq[t - context:t])])

    inputs = seq[:, None].copy()
    targets = np.zeros((L, 1))
    targets[:-1, 0] = seq[1:]
    mask = np.zeros(L)
    mask[context - 1:L - 1] = 1.0
    return Sample(inputs, targets, mask, 'bits', {'task': 'dyn_ngrams', 'length': L, 'table': table,
                                                  'sequence': seq})


def _priority_sort(spec: TaskSpec, rng: np.random.Generator) -> Sample:
    """items with priorities in [-1, 1]; answer = the top sorted_items by descending priority"""
    bits, n, k = spec.bits, spec.num_items, spec.sorted_items
    items = _random_bits(rng, n, bits)
    priorities = rng.uniform(-1.0, 1.0, size=n)
    inputs = np.zeros((n + 2, bits + 3))
    inputs[0, bits] = 1.0
    inputs[1:n + 1, :bits] = items
    inputs[1:n + 1, bits + 2] = priorities
    inputs[n + 1, bits + 1] = 1.0
    order = np.argsort(-priorities, kind='stable')[:k]
    x, y, mask = _answer_block(inputs, items[order], bits)
    return Sample(x, y, mask, 'bits', {'task': 'priority_sort', 'items': items, 'priorities': priorities})


BUILDERS = {
    'copy': _copy,
    'long_copy': _copy,
    'repeat_copy': _repeat_copy,
    'assoc_recall': _assoc_recall,
    'dyn_ngrams': _dyn_ngrams,
    'priority_sort': _priority_sort,
}


def draw_ntm_task(kind: str, spec: TaskSpec, rng: np.random.Generator) -> Sample:
    if kind not in BUILDERS:
        raise ArgumentError(f"unknown ntm task {kind}, expected one of {NTM_KINDS}")
    return BUILDERS[kind](spec.for_kind(kind, 'ntm'), rng)


def generate_ntm_task(kind: str, spec: TaskSpec, index: int = 0) -> Sample:
    return draw_ntm_task(kind, spec, sample_rng(spec.seed, index))


def input_width(kind: str, bits: int) -> int:
    return bits + 3 if kind == 'priority_sort' else (1 if kind == 'dyn_ngrams' else bits + 2)


def output_width(kind: str, bits: int) -> int:
    return bits + 1 if kind == 'repeat_copy' else (1 if kind == 'dyn_ngrams' else bits)
