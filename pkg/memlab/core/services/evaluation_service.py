# memlab/core/services/evaluation_service.py
"""fixed-seed evaluation sets, scored per sample and reduced in index order"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from config.settings import N_JOBS, SHOW_PROGRESS
from core.autodiff import no_grad
from core.exceptions import ArgumentError
from core.services.metrics import compute_metric, validate_metrics
from core.services.storage_service import load_checkpoint
from harness.registry import batch_schedule, build_model
from harness.run_config import config_hash
from tasks.generator import generate_samples, task_dims
from tasks.sample import Batch, collate
from tasks.specs import TaskSpec

logger = logging.getLogger(__name__)

EVAL_SEED_OFFSET = 7_919
EVAL_CHUNK = 50


@dataclass
class MetricSummary:
    mean: float
    sd: float
    n: int

    def to_dict(self) -> Dict[str, float]:
        return {'mean': self.mean, 'sd': self.sd, 'n': self.n}


@dataclass
class EvalSummary:
    metrics: Dict[str, MetricSummary]
    values: Dict[str, List[float]] = field(default_factory=dict, repr=False)

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {name: summary.to_dict() for name, summary in self.metrics.items()}


def eval_spec(spec: TaskSpec, seed: int) -> TaskSpec:
    """held-out stream: same task, seed disjoint from the training stream"""
    return spec.model_copy(update={'seed': seed + EVAL_SEED_OFFSET})


def score_prediction(metric: str, target_kind: str, prediction: np.ndarray, scored_target: np.ndarray,
                     k: Optional[int] = None) -> float:
    if target_kind == 'tokens':
        return compute_metric(metric, np.asarray(prediction, dtype=int), np.argmax(scored_target, axis=-1))
    if target_kind == 'set':
        return compute_metric(metric, prediction, scored_target, k=k or int(np.sum(scored_target > 0)))
    return compute_metric(metric, prediction, scored_target)


def score_batch(metrics: Sequence[str], batch: Batch, predictions: List[np.ndarray]) -> Dict[str, List[float]]:
    if len(predictions) != batch.size:
        raise ArgumentError(f"{len(predictions)} predictions for a batch of {batch.size}")
    out: Dict[str, List[float]] = {m: [] for m in metrics}
    for i, pred in enumerate(predictions):
        scored = batch.targets[i][batch.mask[i] > 0]
        for m in metrics:
            out[m].append(score_prediction(m, batch.target_kind, pred, scored))
    return out


def _eval_chunk(model, spec: TaskSpec, start: int, count: int, metrics: Sequence[str],
                schedule_spec=None) -> Dict[str, List[float]]:
    batch = collate(generate_samples(spec, count, start=start))
    with no_grad():
        schedule = batch_schedule(schedule_spec, batch.mask, seed=start)
        result = model.loss_on_batch(batch, schedule=schedule)
    return score_batch(metrics, batch, result.predictions)


def summarize(values: Dict[str, List[float]]) -> EvalSummary:
    metrics = {}
    for name, vals in values.items():
        arr = np.asarray(vals, dtype=np.float64)
        metrics[name] = MetricSummary(float(arr.mean()) if arr.size else 0.0,
                                      float(arr.std()) if arr.size else 0.0, int(arr.size))
    return EvalSummary(metrics, values)


def evaluate_model(model, spec: TaskSpec, metrics: Sequence[str], n_samples: int, seed: int,
                   schedule_spec=None, n_jobs: Optional[int] = None) -> EvalSummary:
    """mean and s.d. of each metric over n_samples held-out samples"""
    if n_samples < 1:
        raise ArgumentError("n_samples must be >= 1")
    validate_metrics(metrics, task_dims(spec).target_kind)
    spec = eval_spec(spec, seed)
    starts = list(range(0, n_samples, EVAL_CHUNK))
    counts = [min(EVAL_CHUNK, n_samples - s) for s in starts]
    n_jobs = N_JOBS if n_jobs is None else n_jobs

    logger.info(f"🔄 evaluating {list(metrics)} on {n_samples} samples of {spec.kind} (n_jobs={n_jobs})")
    if n_jobs == 1:
        chunks = [_eval_chunk(model, spec, s, c, metrics, schedule_spec)
                  for s, c in tqdm(list(zip(starts, counts)), desc='eval', disable=not SHOW_PROGRESS)]
    else:
        chunks = Parallel(n_jobs=n_jobs)(
            delayed(_eval_chunk)(model, spec, s, c, metrics, schedule_spec) for s, c in zip(starts, counts)
        )

    values: Dict[str, List[float]] = {m: [] for m in metrics}
    for chunk in chunks:
        for m in metrics:
            values[m].extend(chunk[m])
    summary = summarize(values)
    for name, s in summary.metrics.items():
        logger.info(f"✅ {name}: {s.mean:.4f} ± {s.sd:.4f} (n={s.n})")
    return summary


def run_evaluation(checkpoint_path, config, metrics: Sequence[str], n_samples: int, seed: int,
                   task: Optional[TaskSpec] = None, n_jobs: Optional[int] = None) -> EvalSummary:
    """load the checkpoint written for config and evaluate it; the checkpoint file is only read"""
    task = task or config.task
    ckpt = load_checkpoint(checkpoint_path, expected_config_hash=config_hash(config))
    model = build_model(config.model, task_dims(config.task), np.random.default_rng(config.seed))
    model.load_state_dict(ckpt.params)
    return evaluate_model(model, task, metrics, n_samples, seed, config.schedule, n_jobs)
