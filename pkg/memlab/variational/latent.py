# memlab/variational/latent.py
"""
gaussian / mixture-of-gaussians latent machinery.

all ops accept leading batch axes: a GaussianDiag holds (..., d) tensors, a
MixtureLatent holds pi (..., K) and mu/sigma (..., K, d).
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.autodiff import Tensor, as_tensor, log, reshape, softplus, tmax, tsum, exp
from core.exceptions import ArgumentError, ShapeError
from core.validators.tensor_validators import validate_positive

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.Generator, None]


def _rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


@dataclass
class GaussianDiag:
    mu: Tensor
    sigma: Tensor

    def __post_init__(self):
        self.mu, self.sigma = as_tensor(self.mu), as_tensor(self.sigma)
        validate_positive(self.sigma, 'sigma')
        if self.mu.shape != self.sigma.shape:
            raise ShapeError("mu and sigma shapes differ")

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


@dataclass
class MixtureLatent:
    pi: Tensor
    mu: Tensor
    sigma: Tensor

    def __post_init__(self):
        self.pi, self.mu, self.sigma = as_tensor(self.pi), as_tensor(self.mu), as_tensor(self.sigma)
        validate_positive(self.sigma, 'sigma')
        if self.pi.shape[-1] < 1:
            raise ArgumentError("mixture needs K >= 1 modes")
        if np.any(self.pi.data < 0) or not np.allclose(self.pi.data.sum(axis=-1), 1.0, atol=1e-9):
            raise ArgumentError("mixture weights must be a distribution")

    @property
    def num_modes(self) -> int:
        return self.pi.shape[-1]

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]

    @classmethod
    def from_components(cls, pi: Sequence[float], components: List[GaussianDiag]) -> 'MixtureLatent':
        return cls(Tensor(np.asarray(pi, dtype=np.float64)),
                   Tensor(np.stack([g.mu.data for g in components], axis=-2)),
                   Tensor(np.stack([g.sigma.data for g in components], axis=-2)))

    def component(self, i: int) -> GaussianDiag:
        return GaussianDiag(self.mu[..., i, :], self.sigma[..., i, :])


def build_mog_prior(reads: Tensor, read_weights: Tensor) -> Tuple[MixtureLatent, np.ndarray]:
    """
    mu_i = first half of read i, sigma_i = softplus(second half),
    pi_i = max(w_i) / sum_j max(w_j); rows with all-zero weights get uniform pi.
    """
    reads, read_weights = as_tensor(reads), as_tensor(read_weights)
    if reads.shape[-1] % 2:
        raise ArgumentError("read vectors must have even length 2d")
    d = reads.shape[-1] // 2
    K = reads.shape[-2]

    peaks = tmax(read_weights, axis=-1)
    totals = peaks.data.sum(axis=-1, keepdims=True)
    degenerate = totals[..., 0] == 0
    if np.any(degenerate):
        logger.warning("⚠️ all read weights are zero, using a uniform mixture")
        peaks = peaks + degenerate[..., None] * (1.0 / K)
    pi = peaks / tsum(peaks, axis=-1, keepdims=True)

    return MixtureLatent(pi, reads[..., :d], softplus(reads[..., d:])), degenerate


def _kl_terms(mu_f: Tensor, sigma_f: Tensor, mu_g: Tensor, sigma_g: Tensor) -> Tensor:
    diff = mu_f - mu_g
    per_dim = (log(sigma_g) - log(sigma_f)
               + (sigma_f * sigma_f + diff * diff) / (2.0 * sigma_g * sigma_g) - 0.5)
    return tsum(per_dim, axis=-1)


def gaussian_kl(f: GaussianDiag, g: GaussianDiag) -> Tensor:
    """closed-form KL(f || g) for diagonal gaussians, summed over the last axis"""
    if f.mu.shape[-1] != g.mu.shape[-1]:
        raise ShapeError("gaussian dims differ")
    return _kl_terms(f.mu, f.sigma, g.mu, g.sigma)


def mode_kls(f: GaussianDiag, g: MixtureLatent) -> Tensor:
    """KL(f || g_i) for every mode, shape (..., K)"""
    if f.dim != g.dim:
        raise ShapeError("posterior and mixture dims differ")
    lead = f.mu.shape[:-1]
    mu_f = reshape(f.mu, lead + (1, f.dim))
    sigma_f = reshape(f.sigma, lead + (1, f.dim))
    return _kl_terms(mu_f, sigma_f, g.mu, g.sigma)


def d_var(f: GaussianDiag, g: MixtureLatent) -> Tensor:
    """-log sum_i pi_i exp(-KL(f || g_i)), shifted by the smallest weighted KL"""
    kls = mode_kls(f, g)
    # any constant shift cancels; use the min over modes with nonzero weight
    shift = np.where(g.pi.data > 0, kls.data, np.inf).min(axis=-1, keepdims=True)
    weighted = tsum(g.pi * exp(shift - kls), axis=-1)
    return Tensor(shift[..., 0]) - log(weighted)


def sample_reparameterized(f: GaussianDiag, noise_seed: Seed = None) -> Tensor:
    """z = mu + sigma * eps, eps ~ N(0, I) from the seeded source"""
    eps = _rng(noise_seed).standard_normal(f.mu.shape)
    return f.mu + f.sigma * eps


def sample_mog(g: MixtureLatent, noise_seed: Seed = None) -> Tensor:
    """pick a mode by pi for every leading index, then reparameterize it (no grad through the pick)"""
    rng = _rng(noise_seed)
    pi = g.pi.data.reshape(-1, g.num_modes)
    choices = np.array([rng.choice(g.num_modes, p=row / row.sum()) for row in pi])
    mu = g.mu.data.reshape(-1, g.num_modes, g.dim)[np.arange(len(choices)), choices]
    sigma = g.sigma.data.reshape(-1, g.num_modes, g.dim)[np.arange(len(choices)), choices]
    z = mu + sigma * rng.standard_normal(mu.shape)
    return Tensor(z.reshape(g.mu.shape[:-2] + (g.dim,)))


def timestep_elbo_loss(posteriors: Sequence[GaussianDiag], priors: Sequence[MixtureLatent],
                       log_liks: Sequence[Tensor], kl_weight: float = 1.0) -> Tensor:
    """sum_t kl_weight * d_var(f_t || g_t) - sum_t log_lik_t"""
    if not (len(posteriors) == len(priors) == len(log_liks)):
        raise ArgumentError("posteriors, priors and log-likelihoods need equal lengths")
    total = Tensor(0.0)
    for f, g, ll in zip(posteriors, priors, log_liks):
        total = total + kl_weight * tsum(d_var(f, g)) - tsum(as_tensor(ll))
    return total


def kl_anneal_weight(step: int, total_steps: int, fraction: float = 0.2) -> float:
    """linear ramp 0 -> 1 over the first `fraction` of training"""
    ramp = max(1, int(total_steps * fraction))
    return min(1.0, step / ramp)
