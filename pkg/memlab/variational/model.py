# memlab/variational/model.py
"""
variational memory encoder-decoder: the encoder writes the context into a dnc
memory whose K read heads define a K-mode gaussian mixture prior at every
decoding step.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from controllers.cells import LstmCell, lstm_step
from core.autodiff import Tensor, concat, log_softmax, matmul, no_grad, reshape, softplus, tsum
from core.constants import KL_ANNEAL_FRACTION, SEPARATOR_ID
from core.losses import LossResult, mean_over
from core.nn import Embedding, Linear, Module
from dnc.memory import DncAccess, DncState
from variational.latent import (GaussianDiag, MixtureLatent, Seed, _rng, build_mog_prior, kl_anneal_weight,
                                sample_mog, sample_reparameterized, timestep_elbo_loss)

logger = logging.getLogger(__name__)

START_TOKEN = SEPARATOR_ID


@dataclass
class VmedOutput:
    loss: Tensor
    log_liks: List[Tensor]
    posteriors: List[GaussianDiag]
    priors: List[MixtureLatent]
    logits: List[Tensor]


class VmedModel(Module):
    def __init__(self, vocab_size: int, rng: np.random.Generator, embed_size: int = 16,
                 hidden_size: int = 64, latent_size: int = 8, memory_slots: int = 16, modes: int = 3):
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.hidden_size = hidden_size
        self.latent_size = latent_size
        self.modes = modes

        self.embedding = Embedding(vocab_size, embed_size, rng)
        self.access = DncAccess(hidden_size, rng, memory_slots, 2 * latent_size, modes)
        self.encoder = LstmCell(embed_size + self.access.read_size, hidden_size, rng)
        self.utterance = LstmCell(embed_size, hidden_size, rng)
        self.posterior_mu = Linear(2 * latent_size + hidden_size, latent_size, rng)
        self.posterior_sigma = Linear(2 * latent_size + hidden_size, latent_size, rng)
        self.decoder = LstmCell(embed_size + latent_size, hidden_size, rng)
        self.out = Linear(hidden_size, vocab_size, rng)
        # set by the training loop so the kl weight can ramp up
        self.total_steps = 0

    def embed(self, tokens: np.ndarray) -> Tensor:
        return self.embedding(tokens)

    def encode(self, context: np.ndarray) -> Tuple[DncState, Tensor, Tensor]:
        """context (B, L) token ids -> memory, encoder h, c"""
        batch = context.shape[0]
        memory = self.access.initial_state(batch)
        h, c = self.encoder.initial_state(batch)
        reads = Tensor(np.zeros((batch, self.access.read_size)))
        for t in range(context.shape[1]):
            h, c = lstm_step(self.encoder, concat([self.embed(context[:, t]), reads], axis=-1), h, c)
            reads, memory, _ = self.access.step(memory, h, write=True)
        return memory, h, c

    def prior(self, memory: DncState, h_dec: Tensor) -> Tuple[MixtureLatent, Tensor, DncState]:
        """read every head with the decoder state; each read is one mixture mode"""
        emission = self.access.emit(h_dec)
        _, memory = self.access.read(memory, emission)
        reads = matmul(memory.read_weights, memory.memory)
        mixture, _ = build_mog_prior(reads, memory.read_weights)
        mean_read = tsum(reshape(mixture.pi, mixture.pi.shape + (1,)) * reads, axis=-2)
        return mixture, mean_read, memory

    def decode_step(self, memory: DncState, h: Tensor, c: Tensor, prev_tokens: np.ndarray,
                    z: Tensor) -> Tuple[Tensor, Tensor, Tensor, DncState]:
        h, c = lstm_step(self.decoder, concat([self.embed(prev_tokens), z], axis=-1), h, c)
        logits = self.out(h)
        memory = self.access.write(memory, self.access.emit(h))
        return logits, h, c, memory

    def loss(self, context: np.ndarray, target: np.ndarray, seed: Seed = None,
             kl_weight: float = 1.0, mask: Optional[np.ndarray] = None) -> VmedOutput:
        """timestep-wise elbo with one posterior sample per step (teacher forcing)"""
        rng = _rng(seed)
        batch, steps = target.shape
        mask = np.ones((batch, steps)) if mask is None else mask
        memory, h, c = self.encode(context)
        h_u, c_u = self.utterance.initial_state(batch)

        posteriors, priors, log_liks, all_logits = [], [], [], []
        prev = np.full(batch, START_TOKEN)
        for t in range(steps):
            prior, mean_read, memory = self.prior(memory, h)
            h_u, c_u = lstm_step(self.utterance, self.embed(target[:, t]), h_u, c_u)
            features = concat([mean_read, h_u], axis=-1)
            posterior = GaussianDiag(self.posterior_mu(features), softplus(self.posterior_sigma(features)))
            z = sample_reparameterized(posterior, rng)

            logits, h, c, memory = self.decode_step(memory, h, c, prev, z)
            onehot = self.embedding.one_hot(target[:, t])
            log_lik = tsum(log_softmax(logits) * (onehot * mask[:, t:t + 1]), axis=-1)

            posteriors.append(posterior)
            priors.append(prior)
            log_liks.append(log_lik)
            all_logits.append(logits)
            prev = target[:, t]

        loss = timestep_elbo_loss(posteriors, priors, log_liks, kl_weight) / float(batch)
        return VmedOutput(loss, log_liks, posteriors, priors, all_logits)

    def loss_on_batch(self, batch, schedule=None, step: int = 0) -> LossResult:
        """per-sample elbo on (input_tokens -> target_tokens); kl weight ramps over the first 20% of steps"""
        kl_weight = kl_anneal_weight(step, self.total_steps, KL_ANNEAL_FRACTION) if self.total_steps else 1.0
        losses, weights, predictions = [], [], []
        for i, meta in enumerate(batch.meta):
            context = np.asarray(meta['input_tokens'], dtype=int).reshape(1, -1)
            target = np.asarray(meta['target_tokens'], dtype=int).reshape(1, -1)
            noise = np.random.default_rng(np.random.SeedSequence([step, i]))
            output = self.loss(context, target, seed=noise, kl_weight=kl_weight)
            losses.append(output.loss / float(target.shape[1]))
            weights.append(float(target.shape[1]))
            predictions.append(np.array([int(np.argmax(step_logits.data[0])) for step_logits in output.logits]))
        return LossResult(mean_over(losses, weights), predictions)


def generate_sequence(model: VmedModel, context: Sequence[int], T: int, seed: Seed = None) -> List[int]:
    """sample z_t from the memory prior, decode, take the argmax token, update memory"""
    rng = _rng(seed)
    tokens: List[int] = []
    with no_grad():
        memory, h, c = model.encode(np.asarray(context, dtype=int).reshape(1, -1))
        prev = np.array([START_TOKEN])
        for _ in range(T):
            prior, _, memory = model.prior(memory, h)
            z = sample_mog(prior, rng)
            logits, h, c, memory = model.decode_step(memory, h, c, prev, z)
            token = int(np.argmax(logits.data[0]))
            tokens.append(token)
            prev = np.array([token])
    return tokens
