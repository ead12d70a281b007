# memlab/core/services/optimizer.py
"""adam and rmsprop over named parameter arrays, with global-norm clipping"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from core.constants import ADAM_DEFAULTS, DEFAULT_CLIP, RMSPROP_DEFAULTS
from core.exceptions import ArgumentError, ShapeError

logger = logging.getLogger(__name__)

OPTIMIZER_KINDS = ('adam', 'rmsprop')

Arrays = Dict[str, np.ndarray]


@dataclass
class OptimizerState:
    kind: str
    hyper: Dict[str, float]
    step: int = 0
    slots: Dict[str, Arrays] = field(default_factory=dict)
    skipped_steps: int = 0
    last_skipped: bool = False
    last_grad_norm: float = 0.0

    def to_arrays(self) -> Arrays:
        """flat name -> array view used by checkpoints"""
        out = {}
        for slot, arrays in self.slots.items():
            for name, value in arrays.items():
                out[f"{slot}/{name}"] = value
        return out

    def load_arrays(self, arrays: Arrays):
        slots: Dict[str, Arrays] = {}
        for key, value in arrays.items():
            slot, name = key.split('/', 1)
            slots.setdefault(slot, {})[name] = np.array(value, dtype=np.float64)
        self.slots = slots


def default_hyper(kind: str, **overrides) -> Dict[str, float]:
    if kind not in OPTIMIZER_KINDS:
        raise ArgumentError(f"unknown optimizer {kind}, expected one of {OPTIMIZER_KINDS}")
    base = dict(ADAM_DEFAULTS if kind == 'adam' else RMSPROP_DEFAULTS)
    base.update({k: float(v) for k, v in overrides.items() if v is not None})
    return base


def init_state(kind: str, params: Arrays, **hyper) -> OptimizerState:
    hp = default_hyper(kind, **hyper)
    names = ('m', 'v') if kind == 'adam' else ('ms', 'mom')
    slots = {slot: {name: np.zeros_like(p) for name, p in params.items()} for slot in names}
    return OptimizerState(kind, hp, slots=slots)


def global_norm(grads: Arrays) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: Arrays, clip: Optional[float]) -> Tuple[Arrays, float]:
    """scale all grads by clip / norm when the norm exceeds clip; direction is preserved"""
    norm = global_norm(grads)
    if clip is None or clip <= 0 or norm <= clip:
        return grads, norm
    scale = clip / norm
    return {name: g * scale for name, g in grads.items()}, norm


def optimizer_step(kind: str, params: Arrays, grads: Dict[str, Optional[np.ndarray]],
                   state: Optional[OptimizerState] = None,
                   clip: Optional[float] = DEFAULT_CLIP) -> Tuple[Arrays, OptimizerState]:
    """
    one update. missing grads count as zero. non-finite grads skip the step
    and set state.last_skipped; params come back unchanged in that case.
    """
    state = state or init_state(kind, params)
    if state.kind != kind:
        raise ArgumentError(f"state belongs to {state.kind}, not {kind}")

    full = {}
    for name, p in params.items():
        g = grads.get(name)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        full[name] = g

    if not all(np.all(np.isfinite(g)) for g in full.values()):
        state.skipped_steps += 1
        state.last_skipped = True
        logger.warning(f"⚠️ non-finite gradient at step {state.step + 1}, update skipped")
        return params, state

    full, state.last_grad_norm = clip_by_global_norm(full, clip)
    state.last_skipped = False
    state.step += 1
    hp = state.hyper
    new_params = {}

    if kind == 'adam':
        t = state.step
        for name, p in params.items():
            g = full[name]
            m = hp['beta1'] * state.slots['m'][name] + (1 - hp['beta1']) * g
            v = hp['beta2'] * state.slots['v'][name] + (1 - hp['beta2']) * g * g
            state.slots['m'][name], state.slots['v'][name] = m, v
            m_hat = m / (1 - hp['beta1'] ** t)
            v_hat = v / (1 - hp['beta2'] ** t)
            new_params[name] = p - hp['lr'] * m_hat / (np.sqrt(v_hat) + hp['eps'])
    else:
        for name, p in params.items():
            g = full[name]
            ms = hp['decay'] * state.slots['ms'][name] + (1 - hp['decay']) * g * g
            mom = hp['momentum'] * state.slots['mom'][name] + hp['lr'] * g / np.sqrt(ms + hp['eps'])
            state.slots['ms'][name], state.slots['mom'][name] = ms, mom
            new_params[name] = p - mom
    return new_params, state


class Optimizer:
    """binds optimizer_step to a module's parameters and their .grad slots"""

    def __init__(self, module, kind: str = 'adam', clip: Optional[float] = DEFAULT_CLIP, **hyper):
        self.module = module
        self.kind = kind
        self.clip = clip
        self.state = init_state(kind, module.state_dict(), **hyper)

    def step(self) -> bool:
        """apply one update from the current grads; False when it was skipped"""
        tensors = self.module.parameters()
        params = {name: t.data for name, t in tensors.items()}
        grads = {name: t.grad for name, t in tensors.items()}
        new_params, self.state = optimizer_step(self.kind, params, grads, self.state, self.clip)
        for name, tensor in tensors.items():
            tensor.data = new_params[name]
        return not self.state.last_skipped
