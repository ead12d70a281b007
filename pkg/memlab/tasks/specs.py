# memlab/tasks/specs.py
"""
task specifications.

ranges default per kind. for kinds named after a published task the values
must stay inside the published training/testing envelope unless the task is
marked downscaled.
"""
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

FAMILIES: Dict[str, Tuple[str, ...]] = {
    'discrete': ('double', 'copy', 'reverse', 'add', 'max', 'long_copy', 'noisy_copy'),
    'ntm': ('copy', 'repeat_copy', 'assoc_recall', 'dyn_ngrams', 'priority_sort', 'long_copy'),
    'healthcare': ('odd_even', 'sum_two_sequences'),
    'sinusoid': ('sinusoid',),
    'sequencing': ('sequencing',),
}

SEQUENCING_SUBTASKS = ('copy', 'repeat_copy', 'assoc_recall', 'priority_sort')

# (family, kind) -> defaults
DEFAULTS: Dict[Tuple[str, str], Dict[str, object]] = {
    ('discrete', 'double'): {'min_length': 1, 'max_length': 10, 'min_value': 1, 'max_value': 10},
    ('discrete', 'copy'): {'min_length': 1, 'max_length': 10, 'min_value': 1, 'max_value': 10},
    ('discrete', 'reverse'): {'min_length': 1, 'max_length': 10, 'min_value': 1, 'max_value': 10},
    ('discrete', 'add'): {'min_length': 2, 'max_length': 10, 'min_value': 1, 'max_value': 10},
    ('discrete', 'max'): {'min_length': 2, 'max_length': 10, 'min_value': 1, 'max_value': 50},
    ('discrete', 'long_copy'): {'min_length': 1, 'max_length': 40, 'min_value': 1, 'max_value': 10},
    ('discrete', 'noisy_copy'): {'min_length': 1, 'max_length': 10, 'min_value': 1, 'max_value': 10},
    ('ntm', 'copy'): {'min_length': 1, 'max_length': 20},
    ('ntm', 'repeat_copy'): {'min_length': 1, 'max_length': 10},
    ('ntm', 'assoc_recall'): {'min_length': 3, 'max_length': 3},
    ('ntm', 'dyn_ngrams'): {'min_length': 50, 'max_length': 50},
    ('ntm', 'priority_sort'): {'min_length': 20, 'max_length': 20},
    ('ntm', 'long_copy'): {'min_length': 1, 'max_length': 40},
    ('healthcare', 'odd_even'): {'min_length': 1, 'max_length': 20, 'min_value': 1, 'max_value': 49},
    ('healthcare', 'sum_two_sequences'): {'min_length': 1, 'max_length': 10, 'min_value': 1, 'max_value': 50},
    ('sinusoid', 'sinusoid'): {'min_length': 100, 'max_length': 100},
    ('sequencing', 'sequencing'): {'min_length': 1, 'max_length': 10},
}

# published envelopes: field -> (lowest, highest) over training and testing settings
PAPER_BOUNDS: Dict[Tuple[str, str], Dict[str, Tuple[int, int]]] = {
    ('ntm', 'copy'): {'min_length': (1, 120), 'max_length': (1, 120)},
    ('ntm', 'repeat_copy'): {'min_length': (1, 20), 'max_length': (1, 20),
                             'min_repeats': (1, 20), 'max_repeats': (1, 20)},
    ('ntm', 'assoc_recall'): {'min_items': (2, 20), 'max_items': (2, 20), 'item_length': (3, 3)},
    ('ntm', 'dyn_ngrams'): {'min_length': (50, 200), 'max_length': (50, 200)},
    ('ntm', 'priority_sort'): {'num_items': (20, 20), 'sorted_items': (16, 20)},
    ('ntm', 'long_copy'): {'min_length': (1, 200), 'max_length': (1, 200)},
    ('healthcare', 'odd_even'): {'min_length': (1, 20), 'max_length': (1, 20),
                                 'min_value': (1, 49), 'max_value': (1, 49)},
    ('healthcare', 'sum_two_sequences'): {'min_length': (1, 20), 'max_length': (1, 20),
                                          'min_value': (1, 50), 'max_value': (1, 50)},
    ('sinusoid', 'sinusoid'): {'min_length': (100, 100), 'max_length': (100, 100)},
}


def infer_family(kind: str) -> str:
    """ntm wins for kinds shared by two families"""
    for family in ('ntm', 'healthcare', 'sinusoid', 'sequencing', 'discrete'):
        if kind in FAMILIES[family]:
            return family
    raise ValueError(f"unknown task kind {kind}")


class TaskSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: str
    family: Optional[str] = None
    min_length: Optional[int] = Field(default=None, ge=0)
    max_length: Optional[int] = Field(default=None, ge=0)
    min_value: Optional[int] = None
    max_value: Optional[int] = None
    bits: int = Field(default=8, ge=1)
    min_repeats: int = Field(default=1, ge=1)
    max_repeats: int = Field(default=10, ge=1)
    min_items: int = Field(default=2, ge=2)
    max_items: int = Field(default=6, ge=2)
    item_length: int = Field(default=3, ge=1)
    num_items: int = Field(default=20, ge=1)
    sorted_items: int = Field(default=16, ge=1)
    ngram_order: int = Field(default=6, ge=2)
    noisy: bool = False
    amplitude: Optional[float] = None
    noise_prob: float = Field(default=0.3, ge=0.0, le=1.0)
    subtasks: List[str] = Field(default_factory=list)
    seed: int = 0
    downscaled: bool = False

    @model_validator(mode='before')
    @classmethod
    def fill_defaults(cls, data):
        if not isinstance(data, dict) or 'kind' not in data:
            return data
        data = dict(data)
        family = data.get('family') or infer_family(data['kind'])
        data['family'] = family
        for key, value in DEFAULTS.get((family, data['kind']), {}).items():
            if data.get(key) is None:
                data[key] = value
        return data

    @model_validator(mode='after')
    def check_ranges(self):
        if self.family not in FAMILIES or self.kind not in FAMILIES[self.family]:
            raise ValueError(f"kind {self.kind} does not belong to family {self.family}")
        if self.min_length is not None and self.max_length is not None and self.min_length > self.max_length:
            raise ValueError("min_length exceeds max_length")
        if self.min_value is not None and self.max_value is not None and self.min_value > self.max_value:
            raise ValueError("min_value exceeds max_value")
        if self.min_repeats > self.max_repeats or self.min_items > self.max_items:
            raise ValueError("repeat and item ranges must be ordered")
        if self.sorted_items > self.num_items:
            raise ValueError("cannot sort more items than are shown")
        if self.family == 'sequencing':
            if not self.subtasks:
                raise ValueError("sequencing needs at least one subtask")
            unknown = [s for s in self.subtasks if s not in SEQUENCING_SUBTASKS]
            if unknown:
                raise ValueError(f"subtasks must come from {SEQUENCING_SUBTASKS}, got {unknown}")
        if not self.downscaled:
            for name, (lo, hi) in PAPER_BOUNDS.get((self.family, self.kind), {}).items():
                value = getattr(self, name)
                if value is not None and not lo <= value <= hi:
                    raise ValueError(f"{name}={value} is outside the published range [{lo}, {hi}]; "
                                     f"set downscaled=true to override")
        return self

    def with_kind(self, kind: str, family: Optional[str] = None, downscaled: Optional[bool] = None) -> 'TaskSpec':
        """same settings applied to another kind; that kind's defaults refill unset fields"""
        data = self.model_dump(exclude={'kind', 'family', 'subtasks', 'downscaled'}, exclude_defaults=True)
        family = family or infer_family(kind)
        # a composite task hands its ranges down; any other family switch
        # lets the new kind fill in its own defaults
        if family != self.family and self.family != 'sequencing':
            for key, value in DEFAULTS.get((self.family, self.kind), {}).items():
                if data.get(key) == value:
                    data.pop(key, None)
        return TaskSpec(kind=kind, family=family,
                        downscaled=self.downscaled if downscaled is None else downscaled, **data)

    def for_kind(self, kind: str, family: str) -> 'TaskSpec':
        """self when it already describes (family, kind), otherwise a respecified copy"""
        if self.kind == kind and self.family == family:
            return self
        return self.with_kind(kind, family)
