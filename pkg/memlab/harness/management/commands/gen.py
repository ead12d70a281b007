# memlab/harness/management/commands/gen.py
import json
from pathlib import Path

import click
from pydantic import ValidationError

from core.exceptions import ConfigError
from harness.management.base import config_option, handle_errors, out_option, seed_option, success
from harness.run_config import load_run_config
from tasks.generator import generate
from tasks.specs import TaskSpec


def build_task_spec(task, family, seed, min_length, max_length, downscaled) -> TaskSpec:
    data = {'kind': task, 'family': family, 'seed': seed or 0, 'min_length': min_length,
            'max_length': max_length, 'downscaled': downscaled}
    try:
        return TaskSpec(**{k: v for k, v in data.items() if v is not None})
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


@click.command('gen')
@config_option(required=False)
@seed_option
@out_option
@click.option('--task', default=None, help='task kind, e.g. copy, odd_even, sinusoid')
@click.option('--family', default=None, help='discrete | ntm | healthcare | sinusoid | sequencing')
@click.option('--n', 'count', type=int, default=1, show_default=True)
@click.option('--min-length', type=int, default=None)
@click.option('--max-length', type=int, default=None)
@click.option('--downscaled', is_flag=True)
@handle_errors
def gen(config_path, seed, out, task, family, count, min_length, max_length, downscaled):
    """dump task samples as json lines (stdout unless --out is given)"""
    if config_path:
        spec = load_run_config(config_path).task
        if seed is not None:
            spec = spec.model_copy(update={'seed': seed})
    elif task:
        spec = build_task_spec(task, family, seed, min_length, max_length, downscaled)
    else:
        raise click.UsageError('give --task or --config')

    lines = [json.dumps(generate(spec, i).to_record(), sort_keys=True) for i in range(count)]
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        success(f"✅ {count} {spec.kind} samples written to {path}")
    else:
        for line in lines:
            click.echo(line)
