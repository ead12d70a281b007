# memlab/classic/hopfield.py
"""binary hopfield network: hebbian storage, asynchronous recall, energy trace"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from core.exceptions import ArgumentError
from core.validators.tensor_validators import validate_bipolar

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HopfieldNet:
    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ArgumentError("hopfield weights must be square")
        if not np.allclose(W, W.T) or np.any(np.diag(W) != 0):
            raise ArgumentError("hopfield weights must be symmetric with a zero diagonal")
        object.__setattr__(self, 'W', W)

    @property
    def size(self) -> int:
        return self.W.shape[0]

    @classmethod
    def hebbian(cls, patterns: np.ndarray) -> 'HopfieldNet':
        """w_ij = (1/N) sum_q p_i p_j, w_ii = 0"""
        patterns = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
        validate_bipolar(patterns, 'patterns')
        W = patterns.T @ patterns / patterns.shape[1]
        np.fill_diagonal(W, 0.0)
        return cls(W)

    def energy(self, state: np.ndarray) -> float:
        return float(-0.5 * state @ self.W @ state)


@dataclass
class RecallResult:
    state: np.ndarray
    energies: List[float] = field(repr=False)
    sweeps: int = 0
    converged: bool = False


def hopfield_recall(net: HopfieldNet, cue: np.ndarray, max_iters: int = 100,
                    seed: Optional[int] = None) -> RecallResult:
    """
    asynchronous updates in a fixed cyclic scan (seeded start unit) until a
    sweep changes nothing or max_iters sweeps pass. a zero local field keeps
    the unit's current value. energies[0] is the cue's energy, then one entry
    per single-unit update.
    """
    state = np.asarray(cue, dtype=np.float64).copy()
    validate_bipolar(state, 'cue')
    n = net.size
    start = 0 if seed is None else int(np.random.default_rng(seed).integers(n))
    order = [(start + k) % n for k in range(n)]

    energy = net.energy(state)
    energies = [energy]
    for sweep in range(1, max_iters + 1):
        changed = False
        for i in order:
            field_i = net.W[i] @ state
            new = state[i] if field_i == 0 else (1.0 if field_i > 0 else -1.0)
            if new != state[i]:
                # flipping unit i changes the energy by -(new - old) * h_i
                energy -= (new - state[i]) * field_i
                state[i] = new
                changed = True
            energies.append(energy)
        if not changed:
            return RecallResult(state, energies, sweep, True)

    logger.warning(f"⚠️ hopfield recall did not settle within {max_iters} sweeps")
    return RecallResult(state, energies, max_iters, False)


def hopfield_store_recall(patterns: np.ndarray, cue: np.ndarray, max_iters: int = 100,
                          seed: Optional[int] = None) -> RecallResult:
    return hopfield_recall(HopfieldNet.hebbian(patterns), cue, max_iters, seed)
