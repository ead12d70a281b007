# memlab/tasks/generator.py
"""one entry point over every task family, plus batch helpers used by training and evaluation"""
import logging
from dataclasses import dataclass
from typing import List

from core.exceptions import ArgumentError
from tasks.discrete import generate_discrete
from tasks.healthcare import generate_healthcare_synthetic, odd_even_vocab
from tasks.ntm_tasks import generate_ntm_task, input_width, output_width
from tasks.sample import Batch, Sample, collate
from tasks.sequencing import compose_sequencing, sequencing_widths
from tasks.sinusoid import generate_sinusoid
from tasks.specs import TaskSpec
from tasks.tokens import vocab_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskDims:
    input_size: int
    output_size: int
    target_kind: str
    vocab_size: int = 0


def generate(spec: TaskSpec, index: int = 0) -> Sample:
    family = spec.family
    if family == 'discrete':
        return generate_discrete(spec.kind, spec, index)
    if family == 'ntm':
        return generate_ntm_task(spec.kind, spec, index)
    if family == 'healthcare':
        return generate_healthcare_synthetic(spec.kind, spec, index)
    if family == 'sinusoid':
        return generate_sinusoid(spec, index=index)
    if family == 'sequencing':
        return compose_sequencing(spec.subtasks, spec, index)
    raise ArgumentError(f"unknown task family {family}")


def generate_samples(spec: TaskSpec, count: int, start: int = 0) -> List[Sample]:
    return [generate(spec, start + i) for i in range(count)]


def generate_batch(spec: TaskSpec, batch_size: int, step: int = 0) -> Batch:
    """batch `step` holds samples step * batch_size ... (step + 1) * batch_size - 1"""
    return collate(generate_samples(spec, batch_size, start=step * batch_size))


def task_dims(spec: TaskSpec) -> TaskDims:
    """model widths implied by a task"""
    if spec.family == 'discrete':
        vocab = vocab_for(spec.max_value)
        return TaskDims(vocab + 1, vocab, 'tokens', vocab)
    if spec.family == 'healthcare':
        vocab = odd_even_vocab(spec) if spec.kind == 'odd_even' else vocab_for(2 * spec.max_value)
        return TaskDims(vocab + 1, vocab, 'tokens', vocab)
    if spec.family == 'ntm':
        return TaskDims(input_width(spec.kind, spec.bits), output_width(spec.kind, spec.bits), 'bits')
    if spec.family == 'sinusoid':
        return TaskDims(1, 1, 'real')
    if spec.family == 'sequencing':
        in_width, out_width = sequencing_widths(spec.bits)
        return TaskDims(in_width, out_width, 'bits')
    raise ArgumentError(f"unknown task family {spec.family}")
