# memlab/dual/dcwmann.py
"""
dual controller write-protected MANN.

an encoder lstm reads and writes the shared memory while t <= L_in; a separate
decoder lstm takes over afterwards, fed its own previous argmax prediction,
and can only read.
"""
import logging
from typing import Optional

import numpy as np

from controllers.cells import LstmCell, lstm_step
from core.autodiff import Tensor, concat
from core.constants import SEPARATOR_ID
from core.exceptions import ArgumentError
from core.losses import LossResult, mean_over
from core.nn import Embedding, Linear, Module
from dnc.memory import DncAccess
from dual.base import Seq2SeqRun, argmax_tokens, as_token_batch, step_cross_entropy
from scheduling.protection import write_protected_update

logger = logging.getLogger(__name__)


class DualControllerModel(Module):
    def __init__(self, vocab_size: int, rng: np.random.Generator, embed_size: int = 16,
                 hidden_size: int = 64, memory_slots: int = 16, word_size: int = 8, read_heads: int = 1):
        self.vocab_size = vocab_size
        self.hidden_size = hidden_size
        self.encoder_embedding = Embedding(vocab_size, embed_size, rng)
        self.decoder_embedding = Embedding(vocab_size, embed_size, rng)
        self.encoder_access = DncAccess(hidden_size, rng, memory_slots, word_size, read_heads)
        self.decoder_access = DncAccess(hidden_size, rng, memory_slots, word_size, read_heads)
        read_size = self.encoder_access.read_size
        self.encoder = LstmCell(embed_size + read_size, hidden_size, rng)
        self.decoder = LstmCell(embed_size + read_size, hidden_size, rng)
        self.output = Linear(hidden_size + read_size, vocab_size, rng)

    def loss_on_batch(self, batch, schedule=None, step: int = 0) -> LossResult:
        losses, weights, predictions = [], [], []
        for meta in batch.meta:
            targets = np.asarray(meta['target_tokens'], dtype=int)
            run = dcwmann_run(self, meta['input_tokens'], len(targets), targets=targets)
            losses.append(run.loss / float(len(targets)))
            weights.append(float(len(targets)))
            predictions.append(run.tokens[0])
        return LossResult(mean_over(losses, weights), predictions)


def dcwmann_run(model: DualControllerModel, input_seq, decode_len: int,
                targets: Optional[np.ndarray] = None) -> Seq2SeqRun:
    """encode with writes, then decode write-protected; snapshots hold memory after each decode step"""
    if decode_len <= 0:
        raise ArgumentError("decode_len must be > 0")
    tokens = as_token_batch(input_seq)
    batch, input_length = tokens.shape
    if targets is not None:
        targets = np.asarray(targets, dtype=int).reshape(batch, -1)
        if targets.shape[1] != decode_len:
            raise ArgumentError("targets must cover every decoding step")

    memory = model.encoder_access.initial_state(batch)
    h, c = model.encoder.initial_state(batch)
    reads = Tensor(np.zeros((batch, model.encoder_access.read_size)))

    for t in range(1, input_length + 1):
        x = model.encoder_embedding(tokens[:, t - 1])
        h, c = lstm_step(model.encoder, concat([x, reads], axis=-1), h, c)
        emission = model.encoder_access.emit(h)
        memory = write_protected_update(memory, emission, t, input_length, writer=model.encoder_access.write)
        reads, memory = model.encoder_access.read(memory, emission)

    prev = np.full(batch, SEPARATOR_ID)
    logits_seq, predicted, snapshots = [], [], []
    loss = None
    for k in range(decode_len):
        t = input_length + 1 + k
        x = model.decoder_embedding(prev)
        h, c = lstm_step(model.decoder, concat([x, reads], axis=-1), h, c)
        emission = model.decoder_access.emit(h)
        memory = write_protected_update(memory, emission, t, input_length, writer=model.encoder_access.write)
        reads, memory = model.decoder_access.read(memory, emission)
        snapshots.append(memory.memory.data.copy())

        logits = model.output(concat([h, reads], axis=-1))
        prev = argmax_tokens(logits)
        logits_seq.append(logits)
        predicted.append(prev)
        if targets is not None:
            term = step_cross_entropy(logits, targets[:, k], model.vocab_size)
            loss = term if loss is None else loss + term

    if loss is not None:
        loss = loss / float(batch)
    return Seq2SeqRun(np.stack(predicted, axis=1), logits_seq, loss, snapshots)
