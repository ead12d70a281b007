# memlab/harness/management/commands/train.py
import click

from core.services.training_service import run_training
from harness.management.base import banner, config_option, handle_errors, out_option, seed_option, success
from harness.run_config import load_run_config


@click.command('train')
@config_option()
@seed_option
@out_option
@click.option('--desk-scale', is_flag=True, help='merge the [desk_scale] table over the published settings')
@handle_errors
def train(config_path, seed, out, desk_scale):
    """train a model from an experiment config"""
    banner('training')
    config = load_run_config(config_path, desk_scale=desk_scale, seed=seed, out_dir=out)
    click.echo(f"experiment: {config.name}")
    click.echo(f"model: {config.model.kind}   task: {config.task.kind}   seed: {config.seed}")
    click.echo(f"iterations: {config.iterations}   batch: {config.batch_size}\n")

    artifacts = run_training(config)

    if artifacts.records:
        last = artifacts.records[-1]
        scores = '  '.join(f"{k}={v:.4f}" for k, v in last.metrics.items())
        click.echo(f"final step {last.step}: loss {last.loss:.5f}  {scores}")
    if artifacts.skipped_steps:
        click.secho(f"⚠️ {artifacts.skipped_steps} steps skipped on non-finite gradients", fg='yellow')
    success(f"✅ run written to {artifacts.run_dir}")
    click.echo(f"   metrics:    {artifacts.metrics_path}")
    click.echo(f"   checkpoint: {artifacts.checkpoint_path}")
    click.echo(f"   config hash: {artifacts.config_hash[:16]}")
