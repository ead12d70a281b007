# memlab/capacity/analysis.py
"""
memorisation measure of write schedules, brute-force optimum, empirical
timestep contributions and the fisher memory curve.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from config import settings
from core.autodiff import Tensor, backward, tape_scope
from core.exceptions import ArgumentError, DomainError, ResourceError
from core.nn import Module, init_param
from scheduling.schedules import WritePolicy, WriteSchedule

logger = logging.getLogger(__name__)

NORMS = ('fro', 'inf')


@dataclass(frozen=True)
class CapacityParams:
    lam: float
    T: int
    D: int
    C: float = 1.0
    allow_exploding: bool = False

    def __post_init__(self):
        if self.lam <= 0:
            raise ArgumentError("lambda must be > 0")
        if self.lam > 1 and not self.allow_exploding:
            raise ArgumentError("lambda > 1 requires allow_exploding=True")
        if self.C <= 0:
            raise ArgumentError("C must be > 0")
        if self.T < 1 or self.D < 0:
            raise ArgumentError("need T >= 1 and D >= 0")


@dataclass
class ScheduleScore:
    schedule: WriteSchedule
    intervals: List[int]
    score: float


@dataclass
class BruteForceResult:
    """best score plus every schedule tied with it"""
    best: ScheduleScore
    ties: List[ScheduleScore]
    evaluated: int
    scores: List[ScheduleScore] = field(default_factory=list, repr=False)


def f_lambda(x: float, lam: float) -> float:
    """(1 - lam^x)/(1 - lam), and x at lam == 1"""
    if lam <= 0:
        raise ArgumentError("lambda must be > 0")
    if x < 0:
        raise ArgumentError("x must be >= 0")
    if x == 0:
        return 0.0
    if lam == 1.0:
        return float(x)
    log_lam = math.log(lam)
    # expm1 keeps the ratio accurate as lam -> 1
    return math.expm1(x * log_lam) / math.expm1(log_lam)


def schedule_intervals(write_steps: Sequence[int], T: int) -> List[int]:
    """l_1 = K_1, l_i = K_i - K_{i-1}, final l = T - K_last; a write at T closes the last segment"""
    steps = sorted(int(t) for t in write_steps if int(t) != T)
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ArgumentError("write steps must be strictly increasing")
    bounds = [0] + steps + [T]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def capacity_of_schedule(sched: WriteSchedule, params: CapacityParams) -> ScheduleScore:
    intervals = schedule_intervals(sched.steps, params.T)
    if len(intervals) - 1 > params.D:
        raise ArgumentError(f"schedule has {len(intervals) - 1} writes but only D={params.D} slots")
    total = sum(f_lambda(l, params.lam) for l in intervals)
    return ScheduleScore(sched, intervals, params.C / params.T * total)


def capacity_upper_bound(params: CapacityParams) -> float:
    """g(T, D) = C (D+1)/T f(T/(D+1))"""
    return params.C * (params.D + 1) / params.T * f_lambda(params.T / (params.D + 1), params.lam)


def _score_chunk(chunk: List[Tuple[int, ...]], params: CapacityParams) -> List[Tuple[Tuple[int, ...], List[int], float]]:
    scored = []
    for steps in chunk:
        intervals = schedule_intervals(steps, params.T)
        total = sum(f_lambda(l, params.lam) for l in intervals)
        scored.append((steps, intervals, params.C / params.T * total))
    return scored


def brute_force_optimal_schedule(params: CapacityParams, n_jobs: Optional[int] = None,
                                 tol: float = 1e-12, keep_all: bool = False) -> BruteForceResult:
    """enumerate every D-subset of {1..T-1}; ties within tol are all reported"""
    if params.D > params.T - 1:
        raise ArgumentError(f"cannot place D={params.D} writes in {params.T - 1} interior steps")
    count = math.comb(params.T - 1, params.D)
    if count > settings.BRUTE_FORCE_LIMIT:
        raise ResourceError(f"{count} schedules exceed the enumeration limit {settings.BRUTE_FORCE_LIMIT}")

    combos = list(itertools.combinations(range(1, params.T), params.D))
    n_jobs = n_jobs or settings.N_JOBS
    if n_jobs > 1 and len(combos) > 10_000:
        size = math.ceil(len(combos) / n_jobs)
        chunks = [combos[i:i + size] for i in range(0, len(combos), size)]
        parts = Parallel(n_jobs=n_jobs)(delayed(_score_chunk)(chunk, params) for chunk in chunks)
        scored = [item for part in parts for item in part]
    else:
        scored = _score_chunk(combos, params)

    best_value = max(score for _, _, score in scored)
    threshold = best_value - tol * max(1.0, abs(best_value))

    def to_score(item):
        steps, intervals, score = item
        return ScheduleScore(WriteSchedule.from_steps(params.T, steps, WritePolicy.UNIFORM), intervals, score)

    ties = [to_score(item) for item in scored if item[2] >= threshold]
    logger.debug(f"brute force over {len(scored)} schedules, {len(ties)} tied at {best_value:.6f}")
    return BruteForceResult(
        best=ties[0], ties=ties, evaluated=len(scored),
        scores=[to_score(item) for item in scored] if keep_all else [],
    )


# ------------------------------------------
# empirical contributions
# ------------------------------------------

@dataclass
class ContributionProfile:
    """c[i, t] = ||dh_t/dx_i||, zero-indexed, nan above the diagonal i > t"""
    c: np.ndarray
    norm: str = 'fro'

    def column(self, t: int) -> np.ndarray:
        return self.c[:t + 1, t]


class LinearDynamicSystem(Module):
    """h_t = W x_t + U h_{t-1}, with weights stored for row vectors"""

    def __init__(self, W: np.ndarray, U: np.ndarray):
        self.W = Tensor(np.asarray(W, dtype=np.float64).T, requires_grad=True)
        self.U = Tensor(np.asarray(U, dtype=np.float64).T, requires_grad=True)

    @classmethod
    def random(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> 'LinearDynamicSystem':
        model = cls(np.zeros((hidden_size, input_size)), np.zeros((hidden_size, hidden_size)))
        model.W = init_param(rng, (input_size, hidden_size))
        model.U = init_param(rng, (hidden_size, hidden_size))
        return model

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        return x @ self.W + h @ self.U


def _jacobian_norm(jac: np.ndarray, norm: str) -> float:
    if norm == 'fro':
        return float(np.linalg.norm(jac, 'fro'))
    return float(np.abs(jac).sum(axis=1).max())


def empirical_contribution(step_fn: Callable[[Tensor, Tensor], Tensor], h0: np.ndarray,
                           xs: np.ndarray, norm: str = 'fro') -> ContributionProfile:
    """
    run h_t = step_fn(x_t, h_{t-1}) over xs (T, d_in) and measure every input's
    jacobian norm on every later state by one backward pass per state coordinate.
    """
    if norm not in NORMS:
        raise ArgumentError(f"norm must be one of {NORMS}")
    xs = np.asarray(xs, dtype=np.float64)
    T, d_in = xs.shape
    c = np.full((T, T), np.nan)

    with tape_scope():
        inputs = [Tensor(xs[t].reshape(1, d_in), requires_grad=True) for t in range(T)]
        h = Tensor(np.asarray(h0, dtype=np.float64).reshape(1, -1))
        states = []
        for t in range(T):
            h = step_fn(inputs[t], h)
            states.append(h)

        hidden = states[0].shape[-1]
        for t in range(T):
            jacobians = np.zeros((t + 1, hidden, d_in))
            for k in range(hidden):
                if not states[t].requires_grad:
                    break
                for inp in inputs:
                    inp.grad = None
                backward(states[t][0, k])
                for i in range(t + 1):
                    grad = inputs[i].grad
                    jacobians[i, k] = 0.0 if grad is None else grad.reshape(-1)
            for i in range(t + 1):
                c[i, t] = _jacobian_norm(jacobians[i], norm)

    return ContributionProfile(c, norm)


# ------------------------------------------
# fisher memory curve
# ------------------------------------------

def fisher_memory_curve(W: np.ndarray, v: np.ndarray, eps: float = 1e-9, k_max: int = 50) -> np.ndarray:
    """
    J(k) = sum_i |v_i|^2 |lambda_i|^{2k} (1 - |lambda_i|^2) for normal W, with v
    expressed in W's unitary eigenbasis. eps is the normality tolerance.
    """
    W = np.asarray(W, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if W.shape[0] != W.shape[1] or W.shape[0] != v.shape[0]:
        raise ArgumentError("W must be square and match v")
    if np.abs(W @ W.T - W.T @ W).max() > eps:
        raise ArgumentError("closed form needs a normal W (W W^T = W^T W)")

    # complex schur of a normal matrix is diagonal with a unitary basis
    T_form, Z = linalg.schur(W.astype(np.complex128), output='complex')
    eigenvalues = np.diag(T_form)
    radius = np.abs(eigenvalues).max()
    if radius >= 1:
        raise DomainError(f"spectral radius {radius:.4f} >= 1, the curve does not decay")

    coeff = np.abs(Z.conj().T @ v) ** 2
    moduli_sq = np.abs(eigenvalues) ** 2
    k = np.arange(k_max + 1)[:, None]
    return (coeff[None, :] * moduli_sq[None, :] ** k * (1.0 - moduli_sq[None, :])).sum(axis=1)
