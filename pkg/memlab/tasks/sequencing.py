# memlab/tasks/sequencing.py
"""
sequencing and continual learning over the four algorithmic tasks.

a composite sample starts with one indicator step that encodes the ordered
subtask list (channel 4 * position + task index), followed by every subtask's
own input and answer. inputs and targets are padded to a shared width so
any mix of subtasks fits one model.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Union

import numpy as np

from core.exceptions import ArgumentError
from tasks.ntm_tasks import draw_ntm_task
from tasks.sample import Batch, Sample, collate, sample_rng
from tasks.specs import SEQUENCING_SUBTASKS, TaskSpec

logger = logging.getLogger(__name__)

MAX_SUBTASKS = 4
INDICATOR_WIDTH = MAX_SUBTASKS * len(SEQUENCING_SUBTASKS)
CONTINUAL_ORDER = ('copy', 'repeat_copy', 'assoc_recall', 'priority_sort')


def order_indicator(subtasks: Sequence[str]) -> np.ndarray:
    """injective for ordered lists of up to four subtasks"""
    if not subtasks:
        raise ArgumentError("need at least one subtask")
    if len(subtasks) > MAX_SUBTASKS:
        raise ArgumentError(f"at most {MAX_SUBTASKS} subtasks can be sequenced")
    vec = np.zeros(INDICATOR_WIDTH)
    for position, kind in enumerate(subtasks):
        if kind not in SEQUENCING_SUBTASKS:
            raise ArgumentError(f"{kind} cannot be sequenced, expected one of {SEQUENCING_SUBTASKS}")
        vec[position * len(SEQUENCING_SUBTASKS) + SEQUENCING_SUBTASKS.index(kind)] = 1.0
    return vec


def sequencing_widths(bits: int) -> tuple:
    """(input width, output width) shared by every composite sample"""
    return INDICATOR_WIDTH + bits + 3, bits + 1


def compose_sequencing(subtasks: Sequence[str], spec: TaskSpec, index: int = 0) -> Sample:
    indicator = order_indicator(subtasks)
    rng = sample_rng(spec.seed, index)
    in_width, out_width = sequencing_widths(spec.bits)

    parts = [draw_ntm_task(kind, spec.with_kind(kind, 'ntm', downscaled=True), rng) for kind in subtasks]
    steps = 1 + sum(p.steps for p in parts)
    inputs = np.zeros((steps, in_width))
    targets = np.zeros((steps, out_width))
    mask = np.zeros(steps)
    subtask_masks = []

    inputs[0, :INDICATOR_WIDTH] = indicator
    cursor = 1
    for part in parts:
        end = cursor + part.steps
        inputs[cursor:end, INDICATOR_WIDTH:INDICATOR_WIDTH + part.input.shape[1]] = part.input
        targets[cursor:end, :part.target.shape[1]] = part.target
        mask[cursor:end] = part.mask
        sub = np.zeros(steps)
        sub[cursor:end] = part.mask
        subtask_masks.append(sub)
        cursor = end

    meta = {'task': 'sequencing', 'subtasks': list(subtasks), 'subtask_masks': subtask_masks,
            'parts': [p.meta for p in parts]}
    return Sample(inputs, targets, mask, 'bits', meta)


@dataclass
class EvalMarker:
    """emitted after the last batch of a task: evaluate on every task in the curriculum"""
    finished_task: str
    task_position: int
    tasks: List[str]
    step: int


def continual_curriculum(iters_per_task: int, batch: int, spec: TaskSpec,
                         order: Sequence[str] = CONTINUAL_ORDER) -> Iterator[Union[Batch, EvalMarker]]:
    """task-by-task batches; every sample is a single-subtask composite so all tasks share widths"""
    if iters_per_task < 1 or batch < 1:
        raise ArgumentError("iters_per_task and batch must be >= 1")
    order = list(order)
    step = 0
    for position, kind in enumerate(order):
        logger.info(f"🔄 continual curriculum: task {position + 1}/{len(order)} {kind}")
        for _ in range(iters_per_task):
            samples = [compose_sequencing([kind], spec, index=step * batch + i) for i in range(batch)]
            yield collate(samples)
            step += 1
        yield EvalMarker(kind, position, order, step)
