# memlab/harness/management/commands/plot_data.py
from pathlib import Path

import click

from core.services.trace_service import PLOT_KINDS, export_plot_data
from harness.management.base import banner, config_option, handle_errors, out_option, seed_option
from harness.run_config import load_run_config


@click.command('plot-data')
@config_option()
@seed_option
@out_option
@click.option('--kind', type=click.Choice(PLOT_KINDS), required=True)
@click.option('--run-dir', type=click.Path(file_okay=False), default=None,
              help='defaults to the config run directory')
@click.option('--sample', 'sample_index', type=int, default=0, show_default=True)
@handle_errors
def plot_data(config_path, seed, out, kind, run_dir, sample_index):
    """emit the csv behind one figure: learning curve, write gates or program usage"""
    banner(f'plot data: {kind}')
    config = load_run_config(config_path, seed=seed)
    run_dir = Path(run_dir) if run_dir else config.run_dir()
    out = Path(out) if out else run_dir / f"{kind}.csv"
    export_plot_data(kind, config, run_dir, out, sample_index)
    click.echo(f"source run: {run_dir}")
