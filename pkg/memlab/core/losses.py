# memlab/core/losses.py
"""masked sequence losses and the shared loss_on_batch used by the training loop"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from core.autodiff import Tensor, as_tensor, log_softmax, softplus, tsum
from core.exceptions import ArgumentError, ShapeError

logger = logging.getLogger(__name__)

TARGET_KINDS = ('bits', 'tokens', 'real', 'set')


@dataclass
class LossResult:
    """scalar loss plus per-sample predictions over the scored steps"""
    loss: Tensor
    predictions: List[np.ndarray]


def _scored(mask: np.ndarray) -> float:
    return max(1.0, float(np.asarray(mask).sum()))


def sigmoid_bce_with_logits(logits: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    """sum_t mask_t sum_k [softplus(x) - x y], averaged over scored steps"""
    logits = as_tensor(logits)
    if logits.shape != np.shape(targets):
        raise ShapeError(f"logits {logits.shape} vs targets {np.shape(targets)}")
    per_unit = softplus(logits) - logits * targets
    return tsum(per_unit * np.asarray(mask)[..., None]) / _scored(mask)


def masked_cross_entropy(logits: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    """targets are one-hot rows; mean negative log-likelihood over scored steps"""
    logits = as_tensor(logits)
    if logits.shape != np.shape(targets):
        raise ShapeError(f"logits {logits.shape} vs targets {np.shape(targets)}")
    picked = tsum(log_softmax(logits) * targets, axis=-1)
    return -tsum(picked * np.asarray(mask)) / _scored(mask)


def masked_mse(pred: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    pred = as_tensor(pred)
    diff = pred - targets
    per_step = tsum(diff * diff, axis=-1) / float(pred.shape[-1])
    return tsum(per_step * np.asarray(mask)) / _scored(mask)


def multilabel_loss(logits: Tensor, indicator: np.ndarray) -> Tensor:
    """-sum_k [y_k log s_k + (1 - y_k) log(1 - s_k)] with s = sigmoid(logits), summed over labels"""
    logits = as_tensor(logits)
    indicator = np.asarray(indicator, dtype=np.float64)
    if logits.shape != indicator.shape:
        raise ShapeError("set logits and indicator shapes differ")
    return tsum(softplus(logits) - logits * indicator)


def sequence_loss(kind: str, outputs: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    if kind == 'bits':
        return sigmoid_bce_with_logits(outputs, targets, mask)
    if kind == 'tokens':
        return masked_cross_entropy(outputs, targets, mask)
    if kind == 'real':
        return masked_mse(outputs, targets, mask)
    raise ArgumentError(f"no step-aligned loss for target kind {kind}")


def decode_outputs(kind: str, outputs: np.ndarray) -> np.ndarray:
    """raw model outputs -> predictions: thresholded bits, argmax tokens or real values"""
    if kind == 'bits':
        return (outputs > 0).astype(np.float64)
    if kind == 'tokens':
        return np.argmax(outputs, axis=-1)
    return outputs


class SequenceLossMixin:
    """loss_on_batch for models whose forward maps (B, T, in) -> (B, T, out)"""

    def loss_on_batch(self, batch, schedule=None, step: int = 0) -> LossResult:
        outputs = self.forward(Tensor(batch.inputs), schedule=schedule)
        loss = sequence_loss(batch.target_kind, outputs, batch.targets, batch.mask)
        decoded = decode_outputs(batch.target_kind, outputs.data)
        predictions = [decoded[i][batch.mask[i] > 0] for i in range(batch.size)]
        return LossResult(loss, predictions)


def mean_over(results: List[Tensor], weights: Optional[List[float]] = None) -> Tensor:
    if not results:
        raise ArgumentError("nothing to average")
    weights = weights or [1.0] * len(results)
    total = None
    for value, weight in zip(results, weights):
        term = value * weight
        total = term if total is None else total + term
    return total / float(sum(weights))
