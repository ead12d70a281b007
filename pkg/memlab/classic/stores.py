# memlab/classic/stores.py
"""outer-product stores: correlation matrix memory, tensor product bindings, fast weights"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from core.exceptions import ArgumentError, ShapeError

logger = logging.getLogger(__name__)


def _vector(x, size: Optional[int] = None, label: str = 'vector') -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or (size is not None and x.shape[0] != size):
        raise ShapeError(f"{label} must be 1-d of size {size}")
    return x


@dataclass(frozen=True)
class CmmMatrix:
    """M = sum y x^T; exact retrieval when the keys are orthonormal"""
    M: np.ndarray

    @classmethod
    def empty(cls, key_size: int, value_size: int) -> 'CmmMatrix':
        return cls(np.zeros((value_size, key_size)))

    def store(self, x, y) -> 'CmmMatrix':
        x = _vector(x, self.M.shape[1], 'key')
        y = _vector(y, self.M.shape[0], 'value')
        return replace(self, M=self.M + np.outer(y, x))

    def retrieve(self, x) -> np.ndarray:
        return self.M @ _vector(x, self.M.shape[1], 'key')


@dataclass(frozen=True)
class TprTensor:
    """T = sum f (x) r over filler-role pairs; unbinding contracts with a role"""
    T: np.ndarray

    @classmethod
    def empty(cls, filler_size: int, role_size: int) -> 'TprTensor':
        return cls(np.zeros((filler_size, role_size)))

    def bind(self, filler, role) -> 'TprTensor':
        f = _vector(filler, self.T.shape[0], 'filler')
        r = _vector(role, self.T.shape[1], 'role')
        return replace(self, T=self.T + np.outer(f, r))

    def unbind(self, role) -> np.ndarray:
        return self.T @ _vector(role, self.T.shape[1], 'role')


@dataclass(frozen=True)
class FastWeightMatrix:
    """A <- lam A + eta h h^T"""
    A: np.ndarray
    decay: float = 0.95
    rate: float = 0.5

    @classmethod
    def empty(cls, size: int, decay: float = 0.95, rate: float = 0.5) -> 'FastWeightMatrix':
        if not 0 <= decay <= 1:
            raise ArgumentError("decay must lie in [0, 1]")
        return cls(np.zeros((size, size)), decay, rate)

    def update(self, h) -> 'FastWeightMatrix':
        h = _vector(h, self.A.shape[0], 'hidden state')
        return replace(self, A=self.decay * self.A + self.rate * np.outer(h, h))

    def apply(self, h) -> np.ndarray:
        return self.A @ _vector(h, self.A.shape[0], 'hidden state')


def fast_weight_step(fw: FastWeightMatrix, h_prev, x, W: np.ndarray, C: np.ndarray,
                     inner_steps: int = 1, activation: Callable[[np.ndarray], np.ndarray] = np.tanh):
    """
    A(t) = lam A(t-1) + eta h(t) h(t)^T, then h_{s+1} = f([W h(t) + C x(t)] + A(t) h_s)
    starting from h_0 = f(W h(t) + C x(t)); returns (new store, next hidden state).
    """
    if inner_steps < 0:
        raise ArgumentError("inner_steps must be >= 0")
    h_prev = _vector(h_prev, fw.A.shape[0], 'hidden state')
    if W.shape != fw.A.shape or C.shape[0] != fw.A.shape[0]:
        raise ShapeError("W must be (H, H) and C must be (H, D)")
    fw = fw.update(h_prev)
    boundary = W @ h_prev + C @ _vector(x, C.shape[1], 'input')
    h = activation(boundary)
    for _ in range(inner_steps):
        h = activation(boundary + fw.apply(h))
    return fw, h
