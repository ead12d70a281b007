# memlab/tasks/oracles.py
"""
naive reference rules for every generator. each one rebuilds the scored
target from the raw sample input alone, with plain loops, so it shares no
code path with the generators.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from tasks.sample import Sample
from tasks.specs import TaskSpec

logger = logging.getLogger(__name__)


def _input_tokens(sample: Sample) -> List[int]:
    vocab = sample.meta['vocab_size']
    rows = sample.input[sample.input[:, vocab] == 0, :vocab]
    return [int(np.flatnonzero(row)[0]) for row in rows]


def _values(tokens: List[int]) -> List[int]:
    return [t - 2 for t in tokens]


def naive_discrete(kind: str, x: List[int]) -> List[int]:
    T = len(x)
    out: List[int] = []
    if kind == 'double':
        for _ in range(2):
            for v in x:
                out.append(v)
    elif kind in ('copy', 'long_copy'):
        for v in x:
            out.append(v)
    elif kind == 'reverse':
        for i in range(T - 1, -1, -1):
            out.append(x[i])
    elif kind == 'add':
        t = 1
        while 2 * t <= T:
            total = x[t - 1] + x[T - t - 1]
            out.append(total // 2)
            t += 1
    elif kind == 'max':
        t = 1
        while 2 * t <= T:
            a, b = x[2 * t - 2], x[2 * t - 1]
            out.append(a if a >= b else b)
            t += 1
    return out


def naive_odd_even(x: List[int]) -> List[int]:
    out: List[int] = []
    half = len(x) // 2 if len(x) >= 2 else 1
    for n in range(len(x)):
        if n < half:
            out.append(x[n] * 2)
        else:
            out.append(out[n - 1] + 2)
    return out


def naive_sum(stream: List[int], separator: int) -> List[int]:
    cut = stream.index(separator)
    x1, x2 = _values(stream[:cut]), _values(stream[cut + 1:])
    L = len(x1)
    return [x1[i] + x2[L - 1 - i] for i in range(L)]


def _expected_tokens(sample: Sample) -> List[int]:
    kind = sample.meta['task']
    tokens = _input_tokens(sample)
    if kind == 'odd_even':
        values = naive_odd_even(_values(tokens))
    elif kind == 'sum_two_sequences':
        values = naive_sum(tokens, sample.meta['separator_id'])
    else:
        values = naive_discrete(kind, _values(tokens))
    return [v + 2 for v in values]


def _scored_tokens(sample: Sample) -> List[int]:
    return [int(np.argmax(row)) for row in sample.scored_target()]


def naive_ntm_answer(kind: str, inputs: np.ndarray, bits: int) -> np.ndarray:
    """rebuild the answer rows from the raw input rows"""
    start_rows = [i for i in range(inputs.shape[0]) if inputs[i, bits] == 1]
    answer_rows = [i for i in range(inputs.shape[0]) if inputs[i, bits + 1] != 0]
    if kind in ('copy', 'long_copy'):
        return inputs[start_rows[0] + 1:answer_rows[0], :bits]
    if kind == 'repeat_copy':
        items = inputs[start_rows[0] + 1:answer_rows[0], :bits]
        n = int(inputs[answer_rows[0], bits + 1])
        rows = []
        for _ in range(n):
            for item in items:
                rows.append(list(item) + [0.0])
        rows.append([0.0] * bits + [1.0])
        return np.array(rows)
    if kind == 'assoc_recall':
        q_open, q_close = answer_rows[0], answer_rows[1]
        query = inputs[q_open + 1:q_close, :bits]
        size = len(query)
        for i, row in enumerate(start_rows):
            item = inputs[row + 1:row + 1 + size, :bits]
            if np.array_equal(item, query):
                nxt = start_rows[i + 1]
                return inputs[nxt + 1:nxt + 1 + size, :bits]
        return np.zeros((0, bits))
    if kind == 'priority_sort':
        rows = list(range(start_rows[0] + 1, answer_rows[0]))
        remaining = [(inputs[r, bits + 2], r) for r in rows]
        picked = []
        while remaining:
            best = 0
            for j in range(1, len(remaining)):
                if remaining[j][0] > remaining[best][0]:
                    best = j
            picked.append(inputs[remaining.pop(best)[1], :bits])
        return np.array(picked)
    raise KeyError(kind)


@dataclass
class OracleReport:
    kind: str
    checked: int = 0
    mismatches: List[int] = field(default_factory=list)

    @property
    def agrees(self) -> bool:
        return self.checked > 0 and not self.mismatches


def sample_agrees(sample: Sample, spec: TaskSpec) -> bool:
    kind = sample.meta['task']
    if spec.family in ('discrete', 'healthcare'):
        if kind == 'noisy_copy':
            return True
        return _expected_tokens(sample) == _scored_tokens(sample)
    if spec.family == 'ntm':
        if kind == 'dyn_ngrams':
            seq = sample.input[:, 0]
            return bool(np.array_equal(sample.target[:-1, 0], seq[1:]))
        steps = sample.mask > 0
        expected = naive_ntm_answer(kind, sample.input[~steps], spec.bits)
        got = sample.target[steps][:, :expected.shape[1]] if expected.size else sample.target[steps]
        if kind == 'priority_sort':
            expected = expected[:spec.sorted_items]
        return expected.shape == got.shape and bool(np.array_equal(expected, got))
    if spec.family == 'sinusoid':
        return bool(np.all(np.abs(sample.scored_target() - 5.0) <= abs(sample.meta['amplitude']) + 1e-12))
    return True


def check_task_oracle(spec: TaskSpec, n_specs: int = 1000,
                      generator: Callable[[TaskSpec, int], Sample] = None) -> OracleReport:
    """compare generator targets with the naive rule over n_specs sample indices"""
    if generator is None:
        from tasks.generator import generate
        generator = generate
    report = OracleReport(spec.kind)
    for i in range(n_specs):
        sample = generator(spec, i)
        report.checked += 1
        if not sample_agrees(sample, spec):
            report.mismatches.append(i)
    if report.mismatches:
        logger.error(f"❌ {spec.kind}: {len(report.mismatches)}/{report.checked} samples disagree with the naive rule")
    else:
        logger.info(f"✅ {spec.kind}: {report.checked} samples agree with the naive rule")
    return report


def all_task_specs(seed: int = 0) -> Dict[str, TaskSpec]:
    """one spec per checkable kind, at published defaults where they exist"""
    specs = {}
    for kind in ('double', 'copy', 'reverse', 'add', 'max', 'long_copy'):
        specs[f'discrete/{kind}'] = TaskSpec(kind=kind, family='discrete', seed=seed)
    for kind in ('copy', 'repeat_copy', 'assoc_recall', 'dyn_ngrams', 'priority_sort'):
        specs[f'ntm/{kind}'] = TaskSpec(kind=kind, family='ntm', seed=seed)
    for kind in ('odd_even', 'sum_two_sequences'):
        specs[f'healthcare/{kind}'] = TaskSpec(kind=kind, seed=seed)
    specs['sinusoid'] = TaskSpec(kind='sinusoid', seed=seed)
    return specs
