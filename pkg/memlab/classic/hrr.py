# memlab/classic/hrr.py
"""
complex holographic reduced representations: binding multiplies moduli and
adds phases. redundant copies store permuted keys so their noise terms
decorrelate and average out.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ArgumentError

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-9


def random_phasors(rng: np.random.Generator, size) -> np.ndarray:
    return np.exp(1j * rng.uniform(-np.pi, np.pi, size=size))


def complex_cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Re<a, b> / (|a| |b|)"""
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return 0.0 if denom == 0 else float(np.real(np.vdot(b, a)) / denom)


@dataclass
class HrrResult:
    value: np.ndarray
    nonunit: bool


class HrrTrace:
    """S traces of dimension N, copy s binding P_s x with y"""

    def __init__(self, size: int, copies: int = 1, seed: Optional[int] = None):
        if copies < 1:
            raise ArgumentError("need at least one copy")
        rng = np.random.default_rng(seed)
        self.size = size
        self.copies = copies
        self.m = np.zeros((copies, size), dtype=np.complex128)
        # the first copy keeps keys in place
        self.permutations = np.stack([np.arange(size)] + [rng.permutation(size) for _ in range(copies - 1)])

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.size,):
            raise ArgumentError(f"vectors must have dimension {self.size}")
        return x

    def bind(self, x: np.ndarray, y: np.ndarray):
        x, y = self._check(x), self._check(y)
        self.m += x[self.permutations] * y[None, :]

    def unbind(self, x: np.ndarray) -> HrrResult:
        """multiply every copy by the inverse permuted key, then average the copies"""
        x = self._check(x)
        nonunit = bool(np.any(np.abs(np.abs(x) - 1.0) > UNIT_TOL))
        if nonunit:
            logger.warning("⚠️ hrr key is not unit modulus, inverse decoding amplifies noise")
        with np.errstate(divide='ignore', invalid='ignore'):
            inverse = 1.0 / x[self.permutations]
        return HrrResult((inverse * self.m).mean(axis=0), nonunit)


def hrr_encode_decode(pairs: Sequence[Tuple[np.ndarray, np.ndarray]], query: np.ndarray,
                      copies: int = 1, seed: Optional[int] = None) -> HrrResult:
    if not pairs:
        raise ArgumentError("need at least one pair")
    trace = HrrTrace(len(query), copies, seed)
    for x, y in pairs:
        trace.bind(x, y)
    return trace.unbind(query)
