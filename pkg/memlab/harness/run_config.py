# memlab/harness/run_config.py
"""
experiment configs: toml files validated into pydantic models.

a `[desk_scale]` table holds a partial config (same shape as the top level)
that is merged over the published settings when desk scale is requested.
"""
import hashlib
import json
import logging
try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.settings import EXPERIMENTS_DIR, RUNS_DIR
from core.constants import DEFAULT_CLIP, EVAL_SAMPLES, METRIC_KINDS
from core.exceptions import ConfigError
from tasks.specs import TaskSpec

logger = logging.getLogger(__name__)

MODEL_KINDS = ('ntm', 'nutm', 'dnc', 'dcwmann', 'dmnc', 'single_controller', 'vmed')
POLICIES = ('regular', 'uniform', 'random', 'cached_uniform')


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['ntm', 'nutm', 'dnc', 'dcwmann', 'dmnc', 'single_controller', 'vmed']
    hidden_size: int = Field(default=64, ge=1)
    memory_slots: int = Field(default=16, ge=1)
    word_size: int = Field(default=8, ge=1)
    read_heads: int = Field(default=1, ge=1)
    write_heads: int = Field(default=1, ge=1)
    # nutm
    num_programs: int = Field(default=2, ge=1)
    program_key_size: int = Field(default=8, ge=1)
    hard: bool = False
    key_regularizer: bool = True
    orthogonal: bool = False
    # dnc
    link_enabled: bool = True
    cache_size: Optional[int] = Field(default=None, ge=1)
    attn_size: int = Field(default=32, ge=1)
    # token models
    embed_size: int = Field(default=16, ge=1)
    latent_size: int = Field(default=8, ge=1)
    modes: int = Field(default=3, ge=1)
    fusion: Literal['late', 'early'] = 'late'


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['adam', 'rmsprop'] = 'adam'
    lr: Optional[float] = Field(default=None, gt=0)
    clip: Optional[float] = Field(default=DEFAULT_CLIP, ge=0)
    momentum: Optional[float] = Field(default=None, ge=0, lt=1)
    decay: Optional[float] = Field(default=None, ge=0, lt=1)

    def hyper(self) -> Dict[str, float]:
        """only the values set in the config; the rest fall back to the optimizer defaults"""
        keys = ('lr', 'momentum', 'decay') if self.kind == 'rmsprop' else ('lr',)
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}


class ScheduleSpec(BaseModel):
    """write policy for dnc models; D or a compression ratio (D+1)/T fixes the number of writes"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    policy: Literal['regular', 'uniform', 'random', 'cached_uniform'] = 'regular'
    D: Optional[int] = Field(default=None, ge=1)
    compression_ratio: Optional[float] = Field(default=None, gt=0, le=1)
    L: Optional[int] = Field(default=None, ge=1)
    final_write: bool = True

    @model_validator(mode='after')
    def check_budget(self):
        if self.policy != 'regular' and self.D is None and self.compression_ratio is None:
            raise ValueError(f"policy {self.policy} needs D or compression_ratio")
        return self

    def writes_for(self, T: int) -> int:
        if self.D is not None:
            return self.D
        return max(1, round(self.compression_ratio * T) - 1)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    name: str = 'run'
    seed: int
    model: ModelSpec
    task: TaskSpec
    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec)
    schedule: Optional[ScheduleSpec] = None
    iterations: int = Field(default=1000, ge=0)
    batch_size: int = Field(default=16, ge=1)
    eval_every: int = Field(default=100, ge=1)
    eval_samples: int = Field(default=EVAL_SAMPLES, ge=1)
    metrics: List[str] = Field(default_factory=list)
    out_dir: Optional[str] = None

    @model_validator(mode='after')
    def check_metrics(self):
        unknown = [m for m in self.metrics if m not in METRIC_KINDS]
        if unknown:
            raise ValueError(f"unknown metrics {unknown}, expected from {METRIC_KINDS}")
        if self.schedule is not None and self.schedule.policy != 'regular' and self.model.kind != 'dnc':
            raise ValueError("write schedules apply to dnc models only")
        if self.schedule is not None and self.schedule.policy == 'cached_uniform' and self.model.cache_size is None:
            raise ValueError("cached_uniform writing needs model.cache_size")
        if self.model.kind == 'dmnc' and self.task.kind != 'sum_two_sequences':
            raise ValueError("dmnc reads two views, only sum_two_sequences provides them")
        return self

    def run_dir(self) -> Path:
        return Path(self.out_dir) if self.out_dir else RUNS_DIR / self.name

    def hashable(self) -> Dict[str, Any]:
        return self.model_dump(mode='json', exclude={'out_dir'})


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical json dump (output dir excluded)"""
    canonical = json.dumps(config.hashable(), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def deep_merge(base: Dict[str, Any], overlay: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def resolve_config_path(path) -> Path:
    """accept a path or a bare experiment name from config/experiments"""
    path = Path(path)
    if path.exists():
        return path
    candidate = EXPERIMENTS_DIR / (path.name if path.suffix == '.toml' else f"{path.name}.toml")
    if candidate.exists() and path.parent == Path('.'):
        return candidate
    raise FileNotFoundError(f"config file not found: {path}")


def build_run_config(raw: Dict[str, Any], desk_scale: bool = False,
                     overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    raw = dict(raw)
    overlay = raw.pop('desk_scale', None)
    use_overlay = desk_scale
    if isinstance(overlay, bool):
        use_overlay, overlay = use_overlay or overlay, None
    elif isinstance(overlay, dict):
        use_overlay = use_overlay or bool(overlay.pop('enabled', False))
    if use_overlay and overlay:
        raw = deep_merge(raw, overlay)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc


def load_run_config(path, desk_scale: bool = False, seed: Optional[int] = None,
                    out_dir: Optional[str] = None) -> RunConfig:
    path = resolve_config_path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding='utf-8'))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid toml ({exc})") from exc
    config = build_run_config(raw, desk_scale, {'seed': seed, 'out_dir': out_dir})
    logger.info(f"✅ loaded config {path.name} (hash {config_hash(config)[:12]}, desk_scale={desk_scale})")
    return config
