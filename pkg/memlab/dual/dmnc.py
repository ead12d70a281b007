# memlab/dual/dmnc.py
"""
dual memory neural computer: one encoder and one memory per input view, a
decoder that reads both memories and never writes.

late fusion keeps each encoder on its own memory. early fusion addresses
[M1; M2] as one space with shared read parameters and routes every write
value through a gated per-encoder cache.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from controllers.cells import LstmCell, lstm_step
from core.autodiff import Tensor, concat, matmul, reshape, sigmoid, softmax
from core.constants import SEPARATOR_ID
from core.exceptions import ArgumentError
from core.losses import LossResult, mean_over, multilabel_loss
from core.nn import Embedding, Linear, Module
from dnc.memory import DncAccess, DncEmission, DncState, read_weighting
from dual.base import argmax_tokens, as_token_batch, step_cross_entropy

logger = logging.getLogger(__name__)

FUSION_MODES = ('late', 'early')
DECODE_MODES = ('seq', 'set')
VIEWS = (1, 2)


@dataclass
class DmncState:
    memories: Dict[int, DncState]
    h: Dict[int, Tensor]
    c: Dict[int, Tensor]
    reads: Dict[int, Tensor]
    caches: Dict[int, Tensor]
    joint_read_weights: Optional[Tensor] = None    # (B, R, 2N), early fusion only


@dataclass
class DecodeResult:
    predictions: np.ndarray          # seq: (B, T) token ids; set: (B, S) scores in (0, 1)
    loss: Optional[Tensor]
    probs: List[np.ndarray] = field(default_factory=list, repr=False)


@dataclass
class EpisodeRun:
    losses: List[Tensor]
    start_memories: List[Tuple[np.ndarray, np.ndarray]]
    end_memories: List[Tuple[np.ndarray, np.ndarray]]
    predictions: List[np.ndarray]


def cache_update(cache: Tensor, value: Tensor, gate) -> Tensor:
    """c_t = g * c_{t-1} + (1 - g) * v_t"""
    return gate * cache + (1.0 - gate) * value


def block_diagonal_link(link1: Tensor, link2: Tensor) -> Tensor:
    batch, n1, _ = link1.shape
    n2 = link2.shape[1]
    top = concat([link1, Tensor(np.zeros((batch, n1, n2)))], axis=-1)
    bottom = concat([Tensor(np.zeros((batch, n2, n1))), link2], axis=-1)
    return concat([top, bottom], axis=1)


class DmncModel(Module):
    def __init__(self, vocab_size: int, rng: np.random.Generator, embed_size: int = 16,
                 hidden_size: int = 64, memory_slots: int = 16, word_size: int = 8, read_heads: int = 1,
                 fusion: str = 'late', set_size: Optional[int] = None,
                 cache_gate_override: Optional[float] = None):
        if fusion not in FUSION_MODES:
            raise ArgumentError(f"fusion must be one of {FUSION_MODES}")
        self.vocab_size = vocab_size
        self.hidden_size = hidden_size
        self.memory_slots = memory_slots
        self.word_size = word_size
        self.read_heads = read_heads
        self.fusion = fusion
        self.cache_gate_override = cache_gate_override

        self.view_embeddings = [Embedding(vocab_size, embed_size, rng) for _ in VIEWS]
        self.decoder_embedding = Embedding(vocab_size, embed_size, rng)
        self.access = [DncAccess(hidden_size, rng, memory_slots, word_size, read_heads, link_enabled=True)
                       for _ in VIEWS]
        read_size = read_heads * word_size
        self.encoders = [LstmCell(embed_size + read_size, hidden_size, rng) for _ in VIEWS]
        self.cache_gates = [Linear(hidden_size, word_size, rng) for _ in VIEWS]
        # early fusion: one read function over the joint space, for encoders and decoder
        self.joint_read = DncAccess(hidden_size, rng, 2 * memory_slots, word_size, read_heads)
        self.decoder_joint_read = DncAccess(2 * hidden_size, rng, 2 * memory_slots, word_size, read_heads)
        # late fusion: the decoder has its own read function per memory
        self.decoder_reads = [DncAccess(2 * hidden_size, rng, memory_slots, word_size, read_heads)
                              for _ in VIEWS]

        self.decoder = LstmCell(embed_size + 2 * read_size, 2 * hidden_size, rng)
        self.output = Linear(2 * hidden_size + 2 * read_size, vocab_size, rng)
        self.set_size = set_size or vocab_size
        self.set_hidden = Linear(2 * hidden_size, self.set_size, rng)                 # W1
        self.set_read1 = Linear(read_size, self.set_size, rng, bias=False)            # W2
        self.set_read2 = Linear(read_size, self.set_size, rng, bias=False)            # W3
        self._gate_trace: Dict[int, List[np.ndarray]] = {v: [] for v in VIEWS}

    @property
    def read_size(self) -> int:
        return self.read_heads * self.word_size

    def initial_state(self, batch: int) -> DmncState:
        def zeros(width: int) -> Tensor:
            return Tensor(np.zeros((batch, width)))

        joint = None
        if self.fusion == 'early':
            joint = Tensor(np.zeros((batch, self.read_heads, 2 * self.memory_slots)))
        return DmncState(
            memories={v: self.access[v - 1].initial_state(batch) for v in VIEWS},
            h={v: zeros(self.hidden_size) for v in VIEWS},
            c={v: zeros(self.hidden_size) for v in VIEWS},
            reads={v: zeros(self.read_size) for v in VIEWS},
            caches={v: zeros(self.word_size) for v in VIEWS},
            joint_read_weights=joint,
        )

    def reset_controllers(self, state: DmncState) -> DmncState:
        """fresh controller, read and cache state; memories are carried over"""
        fresh = self.initial_state(state.h[1].shape[0])
        return replace(fresh, memories=dict(state.memories))

    def write_gate_trace(self, view: int) -> np.ndarray:
        return np.concatenate(self._gate_trace[view], axis=-1) if self._gate_trace[view] else np.zeros((0,))

    def reset_trace(self):
        self._gate_trace = {v: [] for v in VIEWS}

    def joint_read_step(self, memories: Dict[int, DncState], prev_weights: Tensor,
                        emission: DncEmission) -> Tuple[Tensor, Tensor, Tensor]:
        """one addressing distribution over [M1; M2]; returns per-memory reads (B, R*W) and the weights"""
        memory = concat([memories[1].memory, memories[2].memory], axis=1)
        link = block_diagonal_link(memories[1].link, memories[2].link)
        weights = read_weighting(memory, link, prev_weights, emission)
        n = self.memory_slots
        batch = weights.shape[0]
        r1 = reshape(matmul(weights[:, :, :n], memories[1].memory), (batch, self.read_size))
        r2 = reshape(matmul(weights[:, :, n:], memories[2].memory), (batch, self.read_size))
        return r1, r2, weights

    def decoder_dual_read(self, state: DmncState, h: Tensor) -> Tuple[Tensor, Tensor, DmncState]:
        if self.fusion == 'early':
            emission = self.decoder_joint_read.emit(h)
            r1, r2, weights = self.joint_read_step(state.memories, state.joint_read_weights, emission)
            return r1, r2, replace(state, joint_read_weights=weights)
        memories = dict(state.memories)
        reads = []
        for v in VIEWS:
            access = self.decoder_reads[v - 1]
            r, memories[v] = access.read(memories[v], access.emit(h))
            reads.append(r)
        return reads[0], reads[1], replace(state, memories=memories)

    def loss_on_batch(self, batch, schedule=None, step: int = 0) -> LossResult:
        losses, weights, predictions = [], [], []
        for meta in batch.meta:
            x1, x2 = meta['views']
            targets = np.asarray(meta['target_tokens'], dtype=int)
            run = persistent_episode_run(self, [(x1, x2, targets)], mode='seq')
            losses.append(run.losses[0] / float(len(targets)))
            weights.append(float(len(targets)))
            predictions.append(run.predictions[0][0])
        return LossResult(mean_over(losses, weights), predictions)


def dmnc_encode_step(model: DmncModel, view: int, x, state: DmncState) -> DmncState:
    """one encoder step on the given view: controller, write (direct or cached), read"""
    if view not in VIEWS:
        raise ArgumentError(f"view must be one of {VIEWS}, got {view}")
    k = view - 1
    tokens = np.asarray(x, dtype=int).reshape(-1)
    inputs = concat([model.view_embeddings[k](tokens), state.reads[view]], axis=-1)
    h, c = lstm_step(model.encoders[k], inputs, state.h[view], state.c[view])

    access = model.access[k]
    emission = access.emit(h)
    model._gate_trace[view].append(emission.write_gate.data.copy())
    memories, caches = dict(state.memories), dict(state.caches)
    joint = state.joint_read_weights

    if model.fusion == 'early':
        if model.cache_gate_override is not None:
            gate = model.cache_gate_override
        else:
            gate = sigmoid(model.cache_gates[k](h))
        caches[view] = cache_update(state.caches[view], emission.write_vector, gate)
        memories[view] = access.write(memories[view], replace(emission, write_vector=caches[view]))
        r1, r2, joint = model.joint_read_step(memories, joint, model.joint_read.emit(h))
        reads = r1 + r2
    else:
        memories[view] = access.write(memories[view], emission)
        reads, memories[view] = access.read(memories[view], emission)

    return replace(state, memories=memories, caches=caches, joint_read_weights=joint,
                   h={**state.h, view: h}, c={**state.c, view: c}, reads={**state.reads, view: reads})


def dmnc_decode(model: DmncModel, mode: str, state: DmncState, decode_len: Optional[int] = None,
                targets: Optional[np.ndarray] = None) -> DecodeResult:
    """
    seq: decoder starts from [h1; h2] and reads both memories every step,
    loss = sum_t -log p(y_t). set: one dual read, sigmoid scores and the
    multi-label loss against an indicator target.
    """
    if mode not in DECODE_MODES:
        raise ArgumentError(f"decode mode must be one of {DECODE_MODES}")
    h = concat([state.h[1], state.h[2]], axis=-1)
    c = concat([state.c[1], state.c[2]], axis=-1)
    batch = h.shape[0]

    if mode == 'set':
        r1, r2, _ = model.decoder_dual_read(state, h)
        logits = model.set_hidden(h) + model.set_read1(r1) + model.set_read2(r2)
        loss = None
        if targets is not None:
            loss = multilabel_loss(logits, np.asarray(targets, dtype=np.float64).reshape(logits.shape)) / float(batch)
        return DecodeResult(sigmoid(logits).data, loss)

    if decode_len is None or decode_len <= 0:
        raise ArgumentError("seq decoding needs decode_len > 0")
    if targets is not None:
        targets = np.asarray(targets, dtype=int).reshape(batch, -1)

    prev = np.full(batch, SEPARATOR_ID)
    r1 = Tensor(np.zeros((batch, model.read_size)))
    r2 = Tensor(np.zeros((batch, model.read_size)))
    predicted, probs = [], []
    loss = None
    for t in range(decode_len):
        inputs = concat([model.decoder_embedding(prev), r1, r2], axis=-1)
        h, c = lstm_step(model.decoder, inputs, h, c)
        r1, r2, state = model.decoder_dual_read(state, h)
        logits = model.output(concat([h, r1, r2], axis=-1))
        probs.append(softmax(logits).data)
        prev = argmax_tokens(logits)
        predicted.append(prev)
        if targets is not None:
            term = step_cross_entropy(logits, targets[:, t], model.vocab_size)
            loss = term if loss is None else loss + term
    if loss is not None:
        loss = loss / float(batch)
    return DecodeResult(np.stack(predicted, axis=1), loss, probs)


def encode_views(model: DmncModel, x1, x2, state: DmncState) -> DmncState:
    """alternate view 1 and view 2 steps until both sequences are consumed"""
    x1, x2 = as_token_batch(x1, 'view 1'), as_token_batch(x2, 'view 2')
    i = j = 0
    while i < x1.shape[1] or j < x2.shape[1]:
        if i < x1.shape[1]:
            state = dmnc_encode_step(model, 1, x1[:, i], state)
            i += 1
        if j < x2.shape[1]:
            state = dmnc_encode_step(model, 2, x2[:, j], state)
            j += 1
    return state


def _snapshot(state: DmncState) -> Tuple[np.ndarray, np.ndarray]:
    return state.memories[1].memory.data.copy(), state.memories[2].memory.data.copy()


def persistent_episode_run(model: DmncModel, episodes: Sequence[tuple], mode: str = 'seq') -> EpisodeRun:
    """memories are cleared once before the first episode and carried across the rest"""
    if not episodes:
        raise ArgumentError("episodes must be nonempty")
    batch = as_token_batch(episodes[0][0], 'view 1').shape[0]
    state = model.initial_state(batch)

    losses, starts, ends, predictions = [], [], [], []
    for x1, x2, y in episodes:
        state = model.reset_controllers(state)
        starts.append(_snapshot(state))
        state = encode_views(model, x1, x2, state)
        y = np.asarray(y)
        decode_len = y.reshape(batch, -1).shape[1] if mode == 'seq' else None
        result = dmnc_decode(model, mode, state, decode_len=decode_len, targets=y)
        ends.append(_snapshot(state))
        losses.append(result.loss)
        predictions.append(result.predictions)
    return EpisodeRun(losses, starts, ends, predictions)
