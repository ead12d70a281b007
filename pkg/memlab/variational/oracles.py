# memlab/variational/oracles.py
"""numeric oracles: monte-carlo KL to a mixture and the product-of-mixtures identity"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from core.constants import MC_KL_SAMPLES
from core.exceptions import ArgumentError
from variational.latent import GaussianDiag, MixtureLatent, Seed, _rng, d_var, gaussian_kl

logger = logging.getLogger(__name__)


def _mixture_arrays(g: MixtureLatent) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return g.pi.data.reshape(-1), g.mu.data.reshape(g.num_modes, -1), g.sigma.data.reshape(g.num_modes, -1)


def mixture_log_density(g: MixtureLatent, x: np.ndarray) -> np.ndarray:
    """log g(x) for points x of shape (n, d)"""
    pi, mu, sigma = _mixture_arrays(g)
    with np.errstate(divide='ignore'):
        log_pi = np.log(pi)
    per_mode = stats.norm.logpdf(x[:, None, :], mu[None], sigma[None]).sum(axis=-1)
    return logsumexp(per_mode + log_pi[None], axis=1)


def monte_carlo_kl(f: GaussianDiag, g: MixtureLatent, n_samples: int = MC_KL_SAMPLES,
                   seed: Seed = None) -> Tuple[float, float]:
    """estimate KL(f || g) with samples from f; returns (estimate, standard error)"""
    rng = _rng(seed)
    mu, sigma = f.mu.data.reshape(-1), f.sigma.data.reshape(-1)
    x = mu + sigma * rng.standard_normal((n_samples, mu.size))
    log_f = stats.norm.logpdf(x, mu, sigma).sum(axis=1)
    diffs = log_f - mixture_log_density(g, x)
    return float(diffs.mean()), float(diffs.std(ddof=1) / np.sqrt(n_samples))


@dataclass
class MogProductReport:
    """product g1 g2 as a scaled mixture: weights pi1_i pi2_j c_ij, means, variances"""
    max_abs_error: float
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @property
    def total_scale(self) -> float:
        return float(self.weights.sum())


def mog_product(g1: MixtureLatent, g2: MixtureLatent) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    closed form per pair: c = N(m1; m2, S1 + S2), S = (S1^-1 + S2^-1)^-1,
    m = S (S1^-1 m1 + S2^-1 m2), all diagonal
    """
    pi1, mu1, s1 = _mixture_arrays(g1)
    pi2, mu2, s2 = _mixture_arrays(g2)
    v1, v2 = s1[:, None, :] ** 2, s2[None, :, :] ** 2
    m1, m2 = mu1[:, None, :], mu2[None, :, :]

    scale = stats.norm.pdf(m1, m2, np.sqrt(v1 + v2)).prod(axis=-1)
    variances = 1.0 / (1.0 / v1 + 1.0 / v2)
    means = variances * (m1 / v1 + m2 / v2)
    weights = pi1[:, None] * pi2[None, :] * scale
    d = mu1.shape[-1]
    return weights.reshape(-1), means.reshape(-1, d), variances.reshape(-1, d)


def mog_product_oracle(g1: MixtureLatent, g2: MixtureLatent, grid: np.ndarray) -> MogProductReport:
    """compare g1(x) g2(x) with the combined scaled mixture on every grid point"""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.shape[1] > 2 or g1.dim != grid.shape[1] or g2.dim != grid.shape[1]:
        raise ArgumentError("grid oracle supports matching dims <= 2")

    weights, means, variances = mog_product(g1, g2)
    direct = np.exp(mixture_log_density(g1, grid) + mixture_log_density(g2, grid))
    combined = (weights[None, :] * stats.norm.pdf(grid[:, None, :], means[None], np.sqrt(variances)[None])
                .prod(axis=-1)).sum(axis=1)
    error = float(np.abs(direct - combined).max())
    logger.debug(f"mog product oracle max abs error {error:.3e}")
    return MogProductReport(error, weights, means, variances)


def random_instance(rng: np.random.Generator, modes: int, dim: int) -> Tuple[GaussianDiag, MixtureLatent]:
    """posterior f and a K-mode mixture g with sigmas in [0.5, 2] and means in [-2, 2]"""
    f = GaussianDiag(rng.uniform(-2, 2, dim), rng.uniform(0.5, 2.0, dim))
    pi = rng.dirichlet(np.ones(modes))
    g = MixtureLatent(pi, rng.uniform(-2, 2, (modes, dim)), rng.uniform(0.5, 2.0, (modes, dim)))
    return f, g


@dataclass
class DvarInstance:
    modes: int
    dim: int
    d_var: float
    mc_kl: float
    mc_se: float
    closed_form_gap: float = float('nan')

    @property
    def bound_holds(self) -> bool:
        return self.d_var >= self.mc_kl - 3.0 * self.mc_se


@dataclass
class DvarOracleReport:
    instances: List[DvarInstance]

    @property
    def violations(self) -> List[DvarInstance]:
        return [inst for inst in self.instances if not inst.bound_holds]

    @property
    def max_single_mode_gap(self) -> float:
        gaps = [inst.closed_form_gap for inst in self.instances if inst.modes == 1]
        return max(gaps) if gaps else 0.0

    @property
    def passed(self) -> bool:
        return not self.violations and self.max_single_mode_gap < 1e-10


def dvar_oracle(n_instances: int = 200, seed: Seed = 0, n_samples: int = MC_KL_SAMPLES,
                max_modes: int = 4, max_dim: int = 3) -> DvarOracleReport:
    """D_var against a monte-carlo KL on random instances; single-mode instances must equal the exact KL"""
    if n_instances < 1:
        raise ArgumentError("n_instances must be >= 1")
    rng = _rng(seed)
    instances = []
    for _ in range(n_instances):
        modes, dim = int(rng.integers(1, max_modes + 1)), int(rng.integers(1, max_dim + 1))
        f, g = random_instance(rng, modes, dim)
        bound = float(d_var(f, g).item())
        estimate, se = monte_carlo_kl(f, g, n_samples, rng)
        inst = DvarInstance(modes, dim, bound, estimate, se)
        if modes == 1:
            inst.closed_form_gap = abs(bound - float(gaussian_kl(f, g.component(0)).item()))
        instances.append(inst)

    report = DvarOracleReport(instances)
    if report.passed:
        logger.info(f"✅ d_var bound holds on {n_instances} instances")
    else:
        logger.error(f"❌ d_var oracle: {len(report.violations)} violations, "
                     f"single-mode gap {report.max_single_mode_gap:.2e}")
    return report
