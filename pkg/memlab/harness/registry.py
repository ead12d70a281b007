# memlab/harness/registry.py
"""model construction from a ModelSpec and the task's widths"""
import logging
from typing import Optional

import numpy as np

from core.exceptions import ConfigError
from core.nn import Module
from dnc.model import DncModel
from dual.baselines import SingleControllerBaseline
from dual.dcwmann import DualControllerModel
from dual.dmnc import DmncModel
from harness.run_config import ModelSpec, ScheduleSpec
from ntm.model import NtmModel
from programs.nutm import NutmModel
from scheduling.schedules import WriteSchedule, make_schedule
from tasks.generator import TaskDims
from variational.model import VmedModel

logger = logging.getLogger(__name__)

TOKEN_MODELS = ('dcwmann', 'dmnc', 'single_controller', 'vmed')


def build_model(spec: ModelSpec, dims: TaskDims, rng: np.random.Generator) -> Module:
    if spec.kind in TOKEN_MODELS and dims.target_kind != 'tokens':
        raise ConfigError(f"{spec.kind} reads token sequences, the task produces {dims.target_kind} targets")

    ntm_kwargs = dict(hidden_size=spec.hidden_size, memory_slots=spec.memory_slots,
                      word_size=spec.word_size, read_heads=spec.read_heads, write_heads=spec.write_heads)
    if spec.kind == 'ntm':
        model = NtmModel(dims.input_size, dims.output_size, rng, **ntm_kwargs)
    elif spec.kind == 'nutm':
        model = NutmModel(dims.input_size, dims.output_size, rng, num_programs=spec.num_programs,
                          program_key_size=spec.program_key_size, hard=spec.hard,
                          key_regularizer=spec.key_regularizer, orthogonal=spec.orthogonal, **ntm_kwargs)
    elif spec.kind == 'dnc':
        model = DncModel(dims.input_size, dims.output_size, rng, hidden_size=spec.hidden_size,
                         memory_slots=spec.memory_slots, word_size=spec.word_size,
                         read_heads=spec.read_heads, link_enabled=spec.link_enabled,
                         cache_size=spec.cache_size, attn_size=spec.attn_size)
    elif spec.kind == 'dcwmann':
        model = DualControllerModel(dims.vocab_size, rng, embed_size=spec.embed_size, hidden_size=spec.hidden_size,
                                    memory_slots=spec.memory_slots, word_size=spec.word_size,
                                    read_heads=spec.read_heads)
    elif spec.kind == 'dmnc':
        model = DmncModel(dims.vocab_size, rng, embed_size=spec.embed_size, hidden_size=spec.hidden_size,
                          memory_slots=spec.memory_slots, word_size=spec.word_size,
                          read_heads=spec.read_heads, fusion=spec.fusion)
    elif spec.kind == 'single_controller':
        model = SingleControllerBaseline(dims.vocab_size, rng, embed_size=spec.embed_size,
                                         hidden_size=spec.hidden_size, memory_slots=spec.memory_slots,
                                         word_size=spec.word_size, read_heads=spec.read_heads)
    elif spec.kind == 'vmed':
        model = VmedModel(dims.vocab_size, rng, embed_size=spec.embed_size, hidden_size=spec.hidden_size,
                          latent_size=spec.latent_size, memory_slots=spec.memory_slots, modes=spec.modes)
    else:
        raise ConfigError(f"unknown model kind {spec.kind}")
    logger.info(f"✅ built {spec.kind} with {model.num_parameters()} parameters")
    return model


def input_phase_length(mask: np.ndarray) -> int:
    """steps before the first scored step, shortest over the batch"""
    firsts = [int(np.argmax(row > 0)) if np.any(row > 0) else row.shape[0] for row in np.atleast_2d(mask)]
    return max(1, min(firsts))


def batch_schedule(spec: Optional[ScheduleSpec], mask: np.ndarray, seed: int = 0) -> Optional[WriteSchedule]:
    """schedule over the input phase of a batch; None means write every step"""
    if spec is None or spec.policy == 'regular':
        return None
    T = input_phase_length(mask)
    D = min(spec.writes_for(T), T - 1) if T > 1 else 0
    if D < 1:
        logger.warning(f"⚠️ input phase of {T} steps leaves no room for a schedule, writing every step")
        return None
    L = min(spec.L, T // (D + 1)) if spec.L is not None else None
    return make_schedule(spec.policy, T, D, L=L, seed=seed, final_write=spec.final_write)
