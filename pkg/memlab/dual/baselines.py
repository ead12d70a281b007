# memlab/dual/baselines.py
"""single-controller regular-writing dnc used as the reference for both dual models"""
import logging
from typing import Optional, Sequence

import numpy as np

from core.constants import SEPARATOR_ID
from core.exceptions import ArgumentError
from core.losses import LossResult, mean_over
from core.nn import Embedding, Module
from dnc.model import DncModel
from dual.base import Seq2SeqRun, argmax_tokens, as_token_batch, step_cross_entropy

logger = logging.getLogger(__name__)


class SingleControllerBaseline(Module):
    """one lstm + one memory; writes every step while encoding and decoding"""

    def __init__(self, vocab_size: int, rng: np.random.Generator, embed_size: int = 16,
                 hidden_size: int = 64, memory_slots: int = 16, word_size: int = 8, read_heads: int = 1):
        self.vocab_size = vocab_size
        self.embedding = Embedding(vocab_size, embed_size, rng)
        self.dnc = DncModel(embed_size, vocab_size, rng, hidden_size=hidden_size,
                            memory_slots=memory_slots, word_size=word_size, read_heads=read_heads)

    def run(self, input_seq, decode_len: int, targets: Optional[np.ndarray] = None) -> Seq2SeqRun:
        if decode_len <= 0:
            raise ArgumentError("decode_len must be > 0")
        tokens = as_token_batch(input_seq)
        batch = tokens.shape[0]
        state = self.dnc.initial_state(batch)
        for t in range(tokens.shape[1]):
            _, state = self.dnc.step(self.embedding(tokens[:, t]), state)

        prev = np.full(batch, SEPARATOR_ID)
        logits_seq, predicted = [], []
        loss = None
        for k in range(decode_len):
            logits, state = self.dnc.step(self.embedding(prev), state)
            prev = argmax_tokens(logits)
            logits_seq.append(logits)
            predicted.append(prev)
            if targets is not None:
                term = step_cross_entropy(logits, np.asarray(targets, dtype=int).reshape(batch, -1)[:, k],
                                          self.vocab_size)
                loss = term if loss is None else loss + term
        if loss is not None:
            loss = loss / float(batch)
        return Seq2SeqRun(np.stack(predicted, axis=1), logits_seq, loss)

    def loss_on_batch(self, batch, schedule=None, step: int = 0) -> LossResult:
        losses, weights, predictions = [], [], []
        for meta in batch.meta:
            targets = np.asarray(meta['target_tokens'], dtype=int)
            run = self.run(concatenate_views(meta), len(targets), targets=targets)
            losses.append(run.loss / float(len(targets)))
            weights.append(float(len(targets)))
            predictions.append(run.tokens[0])
        return LossResult(mean_over(losses, weights), predictions)


def concatenate_views(meta: dict) -> Sequence[int]:
    """two-view samples become x1 ++ separator ++ x2; single-view samples pass through"""
    views = meta.get('views')
    if not views:
        return meta['input_tokens']
    return list(views[0]) + [SEPARATOR_ID] + list(views[1])
