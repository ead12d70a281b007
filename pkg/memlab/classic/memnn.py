# memlab/classic/memnn.py
"""end-to-end memory network read: relevance softmax over rows, query refined every hop"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.special import softmax

from core.exceptions import ArgumentError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class MemnnRead:
    answer: np.ndarray
    probabilities: List[np.ndarray]
    reads: List[np.ndarray]


def memnn_hop_read(memory: np.ndarray, outputs: np.ndarray, query: np.ndarray, hops: int = 1,
                   H: Optional[np.ndarray] = None) -> MemnnRead:
    """per hop: p = softmax(m_i . u), r = sum p_i c_i, u <- H u + r"""
    if hops < 1:
        raise ArgumentError("hops must be >= 1")
    memory = np.atleast_2d(np.asarray(memory, dtype=np.float64))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    u = np.asarray(query, dtype=np.float64)
    if memory.shape != outputs.shape or memory.shape[1] != u.shape[0]:
        raise ShapeError("memory rows, output rows and query must agree")
    H = np.eye(u.shape[0]) if H is None else np.asarray(H, dtype=np.float64)

    probabilities, reads = [], []
    for _ in range(hops):
        p = softmax(memory @ u)
        r = p @ outputs
        u = H @ u + r
        probabilities.append(p)
        reads.append(r)
    return MemnnRead(u, probabilities, reads)
