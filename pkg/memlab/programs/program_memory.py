# memlab/programs/program_memory.py
"""
neural stored-program memory: a key-value table whose values are flattened
interface-network weights, looked up by cosine attention each step.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.autodiff import (Tensor, as_tensor, cosine_similarity, make_op, matmul, reshape, softmax,
                           sqrt, tsum)
from core.constants import (GUMBEL_TEMPERATURE, NORM_EPS, PROGRAM_DECAY_EVERY, PROGRAM_ETA0,
                            PROGRAM_ETA_DECAY)
from core.exceptions import ArgumentError, ShapeError
from core.nn import Module, init_param

logger = logging.getLogger(__name__)


class ProgramMemory(Module):
    """P rows of (key in R^K, value in R^S)"""

    def __init__(self, num_programs: int, key_size: int, value_size: int, rng: np.random.Generator):
        if num_programs < 1:
            raise ArgumentError("program memory needs at least one row")
        self.num_programs = num_programs
        self.key_size = key_size
        self.value_size = value_size
        self.keys = init_param(rng, (num_programs, key_size))
        self.values = init_param(rng, (num_programs, value_size))

    @classmethod
    def from_arrays(cls, keys: np.ndarray, values: np.ndarray) -> 'ProgramMemory':
        keys, values = np.atleast_2d(keys), np.atleast_2d(values)
        if keys.shape[0] != values.shape[0]:
            raise ShapeError("keys and values need the same row count")
        if np.any(np.linalg.norm(keys, axis=1) == 0):
            raise ArgumentError("program keys must have nonzero norm")
        pm = cls.__new__(cls)
        pm.num_programs, pm.key_size = keys.shape
        pm.value_size = values.shape[1]
        pm.keys = Tensor(keys, requires_grad=True)
        pm.values = Tensor(values, requires_grad=True)
        return pm


@dataclass
class ProgramQuery:
    key: Tensor
    strength: Tensor

    def __post_init__(self):
        self.key = as_tensor(self.key)
        self.strength = as_tensor(self.strength)
        if np.any(self.strength.data < 0):
            raise ArgumentError("program strength must be >= 0")


@dataclass
class LookupResult:
    program: Tensor
    attn: Tensor
    degenerate: np.ndarray


def _gumbel_noise(shape, rng: np.random.Generator, eps: float = 1e-20) -> np.ndarray:
    u = rng.random(shape)
    return -np.log(-np.log(u + eps) + eps)


def straight_through_one_hot(soft: Tensor) -> Tensor:
    """forward: exact one-hot of the argmax; backward: identity onto soft"""
    hard = np.zeros_like(soft.data)
    np.put_along_axis(hard, np.argmax(soft.data, axis=-1)[..., None], 1.0, axis=-1)
    return make_op(hard, (soft,), lambda g: (g,), 'straight_through')


def program_lookup(pm: ProgramMemory, q: ProgramQuery, hard: bool = False,
                   temperature: float = GUMBEL_TEMPERATURE,
                   rng: Optional[np.random.Generator] = None) -> LookupResult:
    """attn = softmax(beta cos(k, key_i)); p = sum_i attn_i value_i"""
    key, strength = q.key, q.strength
    squeeze = key.ndim == 1
    if squeeze:
        key = reshape(key, (1, key.shape[0]))
    if key.shape[-1] != pm.key_size:
        raise ShapeError(f"query key has {key.shape[-1]} dims, programs use {pm.key_size}")
    batch = key.shape[0]
    if strength.ndim < 2:
        strength = reshape(strength, (batch, 1)) if strength.size == batch else reshape(strength, (1, 1))

    similarity, degenerate = cosine_similarity(
        reshape(key, (batch, 1, pm.key_size)), reshape(pm.keys, (1, pm.num_programs, pm.key_size)))
    degenerate = np.asarray(degenerate).any(axis=-1) if np.ndim(degenerate) > 1 else np.asarray(degenerate)
    if np.any(degenerate):
        logger.warning("⚠️ zero-norm program query, attention falls back to uniform")

    logits = similarity * strength
    if hard:
        rng = rng or np.random.default_rng(0)
        noisy = (logits + _gumbel_noise(logits.shape, rng)) / temperature
        attn = straight_through_one_hot(softmax(noisy, axis=-1))
    else:
        attn = softmax(logits, axis=-1)

    program = matmul(attn, pm.values)
    if squeeze:
        return LookupResult(reshape(program, (pm.value_size,)), reshape(attn, (pm.num_programs,)), degenerate)
    return LookupResult(program, attn, degenerate)


def program_key_regularizers(pm: ProgramMemory, orthogonal: bool = False) -> Tuple[Tensor, Optional[Tensor]]:
    """l_p = sum_{i<j} cos(key_i, key_j); l_p2 = ||K K^T - I||_F when orthogonal"""
    P, K = pm.num_programs, pm.key_size
    cos, _ = cosine_similarity(reshape(pm.keys, (P, 1, K)), reshape(pm.keys, (1, P, K)))
    l_p = tsum(cos * np.triu(np.ones((P, P)), k=1))

    l_p2 = None
    if orthogonal:
        if K != P:
            raise ArgumentError(f"orthogonality penalty needs key dim == P, got {K} vs {P}")
        residual = matmul(pm.keys, pm.keys.T) - np.eye(P)
        l_p2 = sqrt(tsum(residual * residual) + NORM_EPS ** 2)
    return l_p, l_p2


def program_eta(step: int, eta0: float = PROGRAM_ETA0, rate: float = PROGRAM_ETA_DECAY,
                decay_every: int = PROGRAM_DECAY_EVERY) -> float:
    return eta0 * rate ** (step // decay_every)


def annealed_total_loss(pred_loss: Tensor, l_p: Tensor, step: int,
                        decay_every: int = PROGRAM_DECAY_EVERY) -> Tensor:
    """pred + eta(step) l_p with eta = 0.1 * 0.9^floor(step/decay_every)"""
    if step < 0:
        raise ArgumentError("step must be >= 0")
    return as_tensor(pred_loss) + program_eta(step, decay_every=decay_every) * as_tensor(l_p)
