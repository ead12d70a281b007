# memlab/core/services/trace_service.py
"""per-figure csv data: learning curves, write-gate traces, program usage"""
import csv
import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np

from core.autodiff import Tensor, no_grad
from core.exceptions import ArgumentError
from core.services.storage_service import RunStorage, load_checkpoint
from dnc.model import DncModel
from dual.dmnc import VIEWS, DmncModel, encode_views
from harness.registry import build_model
from harness.run_config import RunConfig, config_hash
from programs.nutm import NutmModel
from tasks.generator import generate, task_dims

logger = logging.getLogger(__name__)

PLOT_KINDS = ('learning_curve', 'write_gates', 'program_usage')


def write_csv(path: Path, header: Sequence[str], rows: List[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"✅ wrote {len(rows)} rows to {path}")
    return path


def learning_curve_rows(run_dir: Path):
    path = RunStorage(run_dir).metrics_path
    if not path.exists():
        raise FileNotFoundError(f"no metrics log in {run_dir}")
    with open(path, newline='', encoding='utf-8') as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    return header, rows


def _trained_model(config: RunConfig, run_dir: Path):
    ckpt = load_checkpoint(RunStorage(run_dir).checkpoint_path, expected_config_hash=config_hash(config))
    model = build_model(config.model, task_dims(config.task), np.random.default_rng(config.seed))
    model.load_state_dict(ckpt.params)
    return model


def write_gate_rows(model, sample) -> List[Sequence]:
    """(source, step, gate) with gates averaged over the batch"""
    rows: List[Sequence] = []
    with no_grad():
        if isinstance(model, DncModel):
            model.forward(Tensor(sample.input[None]))
            for t, gate in enumerate(model.write_gate_trace, start=1):
                rows.append(('memory', t, float(np.mean(gate))))
        elif isinstance(model, DmncModel):
            x1, x2 = sample.meta['views']
            model.reset_trace()
            encode_views(model, x1, x2, model.initial_state(1))
            for view in VIEWS:
                trace = model.write_gate_trace(view)
                for t, gate in enumerate(np.atleast_2d(trace).mean(axis=0), start=1):
                    rows.append((f'view{view}', t, float(gate)))
        else:
            raise ArgumentError(f"{type(model).__name__} has no write-gate trace")
    return rows


def program_usage_rows(model, sample) -> List[Sequence]:
    """(step, head, program, attention) averaged over the batch"""
    if not isinstance(model, NutmModel):
        raise ArgumentError("program usage needs a nutm model")
    with no_grad():
        model.forward(Tensor(sample.input[None]))
    trace = model.program_trace            # (steps, heads, batch, programs)
    usage = trace.mean(axis=2)
    rows = []
    for t in range(usage.shape[0]):
        for head in range(usage.shape[1]):
            for p in range(usage.shape[2]):
                rows.append((t + 1, head, p, float(usage[t, head, p])))
    return rows


def export_plot_data(kind: str, config: RunConfig, run_dir: Path, out: Path, sample_index: int = 0) -> Path:
    if kind not in PLOT_KINDS:
        raise ArgumentError(f"unknown plot kind {kind}, expected one of {PLOT_KINDS}")
    if kind == 'learning_curve':
        header, rows = learning_curve_rows(run_dir)
        return write_csv(out, header, rows)

    model = _trained_model(config, run_dir)
    sample = generate(config.task.model_copy(update={'seed': config.seed}), sample_index)
    if kind == 'write_gates':
        return write_csv(out, ('source', 'step', 'write_gate'), write_gate_rows(model, sample))
    return write_csv(out, ('step', 'head', 'program', 'attention'), program_usage_rows(model, sample))
