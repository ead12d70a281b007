# memlab/tasks/sample.py
"""step-aligned samples, padded batches and per-sample seed derivation"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from core.exceptions import ArgumentError, ShapeError
from core.losses import TARGET_KINDS

logger = logging.getLogger(__name__)


@dataclass
class Sample:
    input: np.ndarray        # (T, in)
    target: np.ndarray       # (T, out)
    mask: np.ndarray         # (T,) 1 where the output step is scored
    target_kind: str = 'bits'
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.target_kind not in TARGET_KINDS:
            raise ArgumentError(f"unknown target kind {self.target_kind}")
        if self.input.shape[0] != self.target.shape[0] or self.mask.shape[0] != self.target.shape[0]:
            raise ShapeError(f"input {self.input.shape}, target {self.target.shape} and mask "
                             f"{self.mask.shape} must share their step count")

    @property
    def steps(self) -> int:
        return self.target.shape[0]

    def scored_target(self) -> np.ndarray:
        return self.target[self.mask > 0]

    def to_record(self) -> Dict[str, Any]:
        """json-ready dict used by the gen command"""
        return {
            'input': self.input.tolist(),
            'target': self.target.tolist(),
            'mask': self.mask.tolist(),
            'meta': _jsonable(self.meta),
        }


@dataclass
class Batch:
    inputs: np.ndarray       # (B, T, in)
    targets: np.ndarray      # (B, T, out)
    mask: np.ndarray         # (B, T)
    target_kind: str
    meta: List[Dict[str, Any]]

    @property
    def size(self) -> int:
        return self.inputs.shape[0]


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def sample_rng(seed: int, index: int = 0) -> np.random.Generator:
    """independent stream per (seed, sample index)"""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(index)]))


def collate(samples: List[Sample]) -> Batch:
    """pad every sample to the longest one; padded steps are unscored"""
    if not samples:
        raise ArgumentError("cannot collate an empty list of samples")
    kinds = {s.target_kind for s in samples}
    if len(kinds) != 1:
        raise ArgumentError(f"mixed target kinds in one batch: {sorted(kinds)}")
    in_width = {s.input.shape[1] for s in samples}
    out_width = {s.target.shape[1] for s in samples}
    if len(in_width) != 1 or len(out_width) != 1:
        raise ShapeError("samples in a batch must share input and output widths")

    steps = max(s.steps for s in samples)
    B = len(samples)
    inputs = np.zeros((B, steps, in_width.pop()))
    targets = np.zeros((B, steps, out_width.pop()))
    mask = np.zeros((B, steps))
    for i, s in enumerate(samples):
        inputs[i, :s.steps] = s.input
        targets[i, :s.steps] = s.target
        mask[i, :s.steps] = s.mask
    return Batch(inputs, targets, mask, kinds.pop(), [s.meta for s in samples])


def one_hot_rows(tokens, width: int, steps: Optional[int] = None) -> np.ndarray:
    tokens = np.asarray(tokens, dtype=int)
    if tokens.size and (tokens.min() < 0 or tokens.max() >= width):
        raise ArgumentError(f"token ids must lie in [0, {width})")
    out = np.zeros((steps if steps is not None else len(tokens), width))
    out[np.arange(len(tokens)), tokens] = 1.0
    return out
