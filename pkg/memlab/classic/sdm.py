# memlab/classic/sdm.py
"""kanerva sparse distributed memory with integer counters"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from core.exceptions import ArgumentError
from core.validators.tensor_validators import validate_binary

logger = logging.getLogger(__name__)


@dataclass
class SdmRead:
    bits: np.ndarray
    sums: np.ndarray
    active: int
    degenerate: bool


class SdmMemory:
    """hard locations A (N_loc, D), counters C (N_loc, D_content), access radius r; writes are in place"""

    def __init__(self, addresses: np.ndarray, content_size: int, radius: int):
        addresses = np.asarray(addresses, dtype=np.int8)
        validate_binary(addresses, 'hard locations')
        if radius < 0:
            raise ArgumentError("radius must be >= 0")
        self.addresses = addresses
        self.counters = np.zeros((addresses.shape[0], content_size), dtype=np.int64)
        self.radius = int(radius)

    @classmethod
    def random(cls, num_locations: int, address_size: int, content_size: int, radius: int,
               seed: Optional[int] = None) -> 'SdmMemory':
        rng = np.random.default_rng(seed)
        return cls(rng.integers(0, 2, size=(num_locations, address_size)), content_size, radius)

    @property
    def address_size(self) -> int:
        return self.addresses.shape[1]

    def active(self, address: np.ndarray) -> np.ndarray:
        """locations within hamming distance r of the address"""
        address = np.asarray(address, dtype=np.int8)
        if address.shape != (self.address_size,):
            raise ArgumentError(f"address must have {self.address_size} bits")
        distances = np.count_nonzero(self.addresses != address, axis=1)
        return distances <= self.radius

    def write(self, address: np.ndarray, content: np.ndarray):
        """+1 for a 1 bit, -1 for a 0 bit, at every active location"""
        content = np.asarray(content, dtype=np.int64)
        validate_binary(content, 'content')
        self.counters[self.active(address)] += 2 * content - 1

    def read(self, cue: np.ndarray) -> SdmRead:
        """sum active counters and threshold at zero, ties to 1"""
        mask = self.active(cue)
        sums = self.counters[mask].sum(axis=0)
        count = int(mask.sum())
        if count == 0:
            logger.warning("⚠️ sdm read found no location within the radius")
        return SdmRead((sums >= 0).astype(np.int8), sums, count, count == 0)


def sdm_write_read(mem: SdmMemory, x_addr: np.ndarray, x_content: np.ndarray, cue: np.ndarray) -> SdmRead:
    mem.write(x_addr, x_content)
    return mem.read(cue)


def radius_for_fraction(address_size: int, fraction: float) -> int:
    """smallest r with P(hamming(random, random) <= r) >= fraction"""
    if not 0 < fraction <= 1:
        raise ArgumentError("fraction must lie in (0, 1]")
    return int(stats.binom.ppf(fraction, address_size, 0.5))
