# memlab/scheduling/schedules.py
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional

import numpy as np

from core.exceptions import ArgumentError

logger = logging.getLogger(__name__)


class WritePolicy(str, Enum):
    REGULAR = 'regular'
    RANDOM = 'random'
    UNIFORM = 'uniform'
    CACHED_UNIFORM = 'cached_uniform'
    WRITE_PROTECTED = 'write_protected'


@dataclass(frozen=True)
class WriteSchedule:
    """timesteps (1-based) at which memory writes happen"""
    T: int
    steps: FrozenSet[int]
    policy: WritePolicy
    interval: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if any(t < 1 or t > self.T for t in self.steps):
            raise ArgumentError(f"write steps must lie in [1, {self.T}]")

    def writes_at(self, t: int) -> bool:
        return t in self.steps

    def sorted_steps(self) -> List[int]:
        return sorted(self.steps)

    def to_json(self) -> str:
        return json.dumps({'policy': self.policy.value, 'T': self.T, 'steps': self.sorted_steps()})

    @classmethod
    def from_steps(cls, T: int, steps: Iterable[int], policy: WritePolicy = WritePolicy.UNIFORM) -> 'WriteSchedule':
        return cls(T=T, steps=frozenset(int(t) for t in steps), policy=WritePolicy(policy))


def uniform_interval(T: int, D: int) -> int:
    return T // (D + 1)


def make_schedule(policy, T: int, D: int, L: Optional[int] = None, seed: Optional[int] = None,
                  final_write: bool = True, input_length: Optional[int] = None) -> WriteSchedule:
    """
    build the write steps for a policy.

    uniform writes at multiples of floor(T/(D+1)) up to T; with final_write=False
    only the first D of those are kept. cached_uniform uses interval L
    (default floor(T/(D+1))). write_protected writes during the first
    input_length steps only.
    """
    policy = WritePolicy(policy)
    if T < 1:
        raise ArgumentError("T must be >= 1")
    if D < 1 and policy not in (WritePolicy.REGULAR, WritePolicy.WRITE_PROTECTED):
        raise ArgumentError("D must be >= 1")

    if policy == WritePolicy.REGULAR:
        return WriteSchedule(T, frozenset(range(1, T + 1)), policy, interval=1)

    if policy == WritePolicy.WRITE_PROTECTED:
        if input_length is None or input_length < 0:
            raise ArgumentError("write_protected needs input_length >= 0")
        return WriteSchedule(T, frozenset(range(1, min(input_length, T) + 1)), policy)

    if policy == WritePolicy.RANDOM:
        rng = np.random.default_rng(seed)
        p = min(1.0, (D + 1) / T)
        chosen = np.nonzero(rng.random(T) < p)[0] + 1
        return WriteSchedule(T, frozenset(int(t) for t in chosen), policy, meta={'p': p, 'seed': seed})

    if D + 1 > T:
        raise ArgumentError(f"D+1={D + 1} exceeds T={T}; uniform writing is undefined")
    interval = uniform_interval(T, D)
    if policy == WritePolicy.CACHED_UNIFORM and L is not None:
        if L < 1 or L > interval:
            raise ArgumentError(f"cache length must lie in [1, {interval}]")
        interval = L

    steps = list(range(interval, T + 1, interval))
    if policy == WritePolicy.UNIFORM and not final_write:
        steps = steps[:D]
    return WriteSchedule(T, frozenset(steps), policy, interval=interval)
