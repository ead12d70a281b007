# memlab/core/services/metrics.py
"""task metrics: bit error/accuracy, sequence accuracy, normalised edit distance, P@k, mse"""
import logging
from typing import Optional, Sequence

import numpy as np

from core.constants import METRIC_KINDS
from core.exceptions import ArgumentError, ShapeError

logger = logging.getLogger(__name__)


def _same_shape(pred, target):
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    return pred, target


def bit_error(pred, target) -> float:
    """number of wrong bits in the sequence; predictions are thresholded at 0.5"""
    pred, target = _same_shape(pred, target)
    return float(np.sum((pred > 0.5) != (target > 0.5)))


def bit_accuracy(pred, target) -> float:
    pred, target = _same_shape(pred, target)
    if target.size == 0:
        return 1.0
    return 1.0 - bit_error(pred, target) / target.size


def seq_accuracy(pred: Sequence, target: Sequence) -> float:
    """positions predicted correctly over the longer length; extra or missing steps count as wrong"""
    pred, target = list(np.asarray(pred).tolist()), list(np.asarray(target).tolist())
    longest = max(len(pred), len(target))
    if longest == 0:
        return 1.0
    return sum(1 for a, b in zip(pred, target) if a == b) / longest


def levenshtein(a: Sequence, b: Sequence) -> int:
    a, b = list(a), list(b)
    prev = np.arange(len(b) + 1)
    for i, x in enumerate(a, start=1):
        cur = np.empty_like(prev)
        cur[0] = i
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return int(prev[-1])


def nld(pred: Sequence, target: Sequence) -> float:
    """edit distance over the longer length; two empty sequences score 0"""
    pred = np.asarray(pred).tolist() if not isinstance(pred, str) else pred
    target = np.asarray(target).tolist() if not isinstance(target, str) else target
    longest = max(len(pred), len(target))
    if longest == 0:
        return 0.0
    return levenshtein(pred, target) / longest


def precision_at_k(scores, relevant, k: int) -> float:
    """scores over candidates, relevant is a 0/1 indicator over the same candidates"""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    relevant = np.asarray(relevant).reshape(-1)
    if scores.shape != relevant.shape:
        raise ShapeError("scores and relevance indicator must cover the same candidates")
    if not 1 <= k <= scores.size:
        raise ArgumentError(f"k={k} must lie in [1, {scores.size}]")
    top = np.argsort(-scores, kind='stable')[:k]
    return float(np.sum(relevant[top] > 0)) / k


def mse(pred, target) -> float:
    pred, target = _same_shape(pred, target)
    return float(np.mean((pred - target) ** 2)) if target.size else 0.0


def compute_metric(kind: str, pred, target, k: Optional[int] = None) -> float:
    if kind == 'bit_error':
        return bit_error(pred, target)
    if kind == 'bit_accuracy':
        return bit_accuracy(pred, target)
    if kind == 'seq_accuracy':
        return seq_accuracy(pred, target)
    if kind == 'nld':
        return nld(pred, target)
    if kind == 'precision_at_k':
        if k is None:
            raise ArgumentError("precision_at_k needs k")
        return precision_at_k(pred, target, k)
    if kind == 'mse':
        return mse(pred, target)
    raise ArgumentError(f"unknown metric {kind}, expected one of {METRIC_KINDS}")


# metrics that make sense for each target kind
METRICS_FOR_TARGET = {
    'bits': ('bit_error', 'bit_accuracy'),
    'tokens': ('seq_accuracy', 'nld'),
    'real': ('mse',),
    'set': ('precision_at_k',),
}


def validate_metrics(kinds: Sequence[str], target_kind: str):
    allowed = METRICS_FOR_TARGET.get(target_kind, ())
    bad = [k for k in kinds if k not in allowed]
    if bad:
        raise ArgumentError(f"metrics {bad} do not apply to {target_kind} targets (allowed: {allowed})")
