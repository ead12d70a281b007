# memlab/core/services/training_service.py
import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from tqdm import tqdm

from config.settings import RECORD_WALL_TIME, SHOW_PROGRESS
from core.autodiff import backward, tape_scope
from core.exceptions import DomainError, NonFiniteLossError
from core.services.evaluation_service import score_batch
from core.services.metrics import METRICS_FOR_TARGET, validate_metrics
from core.services.optimizer import Optimizer
from core.services.storage_service import Checkpoint, RunStorage, save_checkpoint
from harness.registry import batch_schedule, build_model
from harness.run_config import RunConfig, config_hash
from tasks.generator import generate_batch, task_dims

logger = logging.getLogger(__name__)


@dataclass
class MetricRecord:
    step: int
    loss: float
    metrics: Dict[str, float]
    wall_ms: int

    def row(self, names: List[str]) -> List[str]:
        return [str(self.step), repr(self.loss)] + [repr(self.metrics[n]) for n in names] + [str(self.wall_ms)]


@dataclass
class RunArtifacts:
    run_dir: Path
    config_hash: str
    metrics_path: Path
    checkpoint_path: Path
    initial_checkpoint_path: Path
    records: List[MetricRecord] = field(default_factory=list)
    skipped_steps: int = 0


def training_metrics(config: RunConfig) -> List[str]:
    target_kind = task_dims(config.task).target_kind
    names = list(config.metrics) or list(METRICS_FOR_TARGET[target_kind])
    validate_metrics(names, target_kind)
    return names


class MetricsLog:
    """metrics.csv with a fixed column order: step,loss,<metrics...>,wall_ms"""

    def __init__(self, path: Path, metric_names: List[str]):
        self.path = path
        self.names = metric_names
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            csv.writer(fh, lineterminator='\n').writerow(['step', 'loss'] + metric_names + ['wall_ms'])

    def append(self, record: MetricRecord):
        with open(self.path, 'a', newline='', encoding='utf-8') as fh:
            csv.writer(fh, lineterminator='\n').writerow(record.row(self.names))


def _checkpoint(model, optimizer: Optimizer, step: int, digest: str, config: RunConfig) -> Checkpoint:
    return Checkpoint(model.state_dict(), step, digest, optimizer.state,
                      {'model': config.model.kind, 'task': config.task.kind, 'name': config.name})


def run_training(config: RunConfig, run_dir: Optional[Path] = None,
                 record_wall_time: bool = RECORD_WALL_TIME) -> RunArtifacts:
    """
    train config.model on config.task. every artifact is a function of the
    config alone (wall_ms aside), so two runs of one config agree byte for byte.
    """
    storage = RunStorage(run_dir or config.run_dir()).prepare()
    digest = config_hash(config)
    storage.write_config({'config': config.hashable(), 'config_hash': digest})

    dims = task_dims(config.task)
    model = build_model(config.model, dims, np.random.default_rng(config.seed))
    if hasattr(model, 'total_steps'):
        model.total_steps = config.iterations
    optimizer = Optimizer(model, config.optimizer.kind, clip=config.optimizer.clip, **config.optimizer.hyper())
    train_spec = config.task.model_copy(update={'seed': config.seed})

    names = training_metrics(config)
    log = MetricsLog(storage.metrics_path, names)
    save_checkpoint(storage.initial_checkpoint_path, _checkpoint(model, optimizer, 0, digest, config))
    artifacts = RunArtifacts(storage.run_dir, digest, storage.metrics_path, storage.checkpoint_path,
                             storage.initial_checkpoint_path)

    logger.info(f"🔄 training {config.model.kind} on {config.task.kind} for {config.iterations} steps "
                f"(batch {config.batch_size}, seed {config.seed})")
    started = time.perf_counter()
    for step in tqdm(range(1, config.iterations + 1), desc=config.name, disable=not SHOW_PROGRESS):
        batch = generate_batch(train_spec, config.batch_size, step=step - 1)
        schedule = batch_schedule(config.schedule, batch.mask, seed=config.seed + step)
        model.zero_grad()
        with tape_scope():
            try:
                result = model.loss_on_batch(batch, schedule=schedule, step=step)
                loss = result.loss.item()
                if not np.isfinite(loss):
                    raise DomainError(f"loss became {loss}")
                backward(result.loss)
            except DomainError as exc:
                # ops raise on nan/inf as soon as they appear, usually before the loss is formed
                record = {'step': step, 'error': str(exc), 'config_hash': digest,
                          'last_grad_norm': optimizer.state.last_grad_norm,
                          'task_meta': [m.get('task') for m in batch.meta]}
                storage.write_json('nonfinite.json', record)
                logger.error(f"❌ non-finite value at step {step}, run aborted: {exc}")
                raise NonFiniteLossError(f"{exc} at step {step}", step=step, record=record) from exc
        optimizer.step()

        if step % config.eval_every == 0 or step == config.iterations:
            scores = score_batch(names, batch, result.predictions)
            wall_ms = int((time.perf_counter() - started) * 1000) if record_wall_time else 0
            entry = MetricRecord(step, loss, {n: float(np.mean(v)) for n, v in scores.items()}, wall_ms)
            log.append(entry)
            artifacts.records.append(entry)
            logger.info(f"step {step}: loss {loss:.5f} " + ' '.join(f"{n}={entry.metrics[n]:.4f}" for n in names))

    artifacts.skipped_steps = optimizer.state.skipped_steps
    save_checkpoint(storage.checkpoint_path, _checkpoint(model, optimizer, config.iterations, digest, config))
    logger.info(f"✅ run finished: {storage.run_dir}")
    return artifacts
