# memlab/harness/management/commands/eval.py
from pathlib import Path

import click

from core.services.evaluation_service import run_evaluation
from core.services.metrics import METRICS_FOR_TARGET
from core.services.storage_service import RunStorage
from harness.management.base import banner, config_option, handle_errors, out_option, seed_option, success
from harness.run_config import load_run_config
from tasks.generator import task_dims


@click.command('eval')
@config_option()
@seed_option
@out_option
@click.option('--checkpoint', type=click.Path(dir_okay=False), default=None,
              help='defaults to the checkpoint in the config run directory')
@click.option('--metric', 'metrics', multiple=True, help='repeatable; defaults to the task metrics')
@click.option('--n-samples', type=int, default=None, help='held-out samples (default: config eval_samples)')
@click.option('--n-jobs', type=int, default=None)
@click.option('--desk-scale', is_flag=True)
@handle_errors
def evaluate(config_path, seed, out, checkpoint, metrics, n_samples, n_jobs, desk_scale):
    """score a trained checkpoint on a fixed-seed held-out set"""
    banner('evaluation')
    config = load_run_config(config_path, desk_scale=desk_scale)
    storage = RunStorage(config.run_dir())
    checkpoint = Path(checkpoint) if checkpoint else storage.checkpoint_path
    metrics = list(metrics) or list(config.metrics) or list(METRICS_FOR_TARGET[task_dims(config.task).target_kind])
    n_samples = n_samples or config.eval_samples
    seed = config.seed if seed is None else seed

    click.echo(f"checkpoint: {checkpoint}")
    click.echo(f"task: {config.task.kind}   samples: {n_samples}   seed: {seed}\n")
    summary = run_evaluation(checkpoint, config, metrics, n_samples, seed, n_jobs=n_jobs)

    for name, s in summary.metrics.items():
        click.echo(f"  {name:<15} {s.mean:.4f} ± {s.sd:.4f}")

    target = RunStorage(Path(out)).prepare() if out else storage
    path = target.write_json('eval_summary.json', {
        'checkpoint': str(checkpoint), 'task': config.task.kind, 'n_samples': n_samples,
        'seed': seed, 'metrics': summary.to_dict(),
    })
    success(f"\n✅ summary written to {path}")
