# memlab/harness/management/commands/oracle.py
import sys

import click
import numpy as np

from core.constants import MC_KL_SAMPLES
from harness.management.base import EXIT_RUNTIME, banner, error, handle_errors, seed_option, success
from tasks.oracles import all_task_specs, check_task_oracle
from variational.latent import MixtureLatent
from variational.oracles import dvar_oracle, mog_product_oracle

ORACLE_KINDS = ('dvar', 'mog_product', 'tasks')


def _run_dvar(n, seed, samples) -> bool:
    report = dvar_oracle(n_instances=n, seed=seed, n_samples=samples)
    click.echo(f"instances: {len(report.instances)}   violations: {len(report.violations)}")
    click.echo(f"max |d_var - kl| on single-mode instances: {report.max_single_mode_gap:.3e}")
    return report.passed


def _run_mog_product(n, seed) -> bool:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        dim = int(rng.integers(1, 3))
        mixtures = []
        for _ in range(2):
            k = int(rng.integers(1, 4))
            mixtures.append(MixtureLatent(rng.dirichlet(np.ones(k)), rng.uniform(-2, 2, (k, dim)),
                                          rng.uniform(0.5, 2.0, (k, dim))))
        axis = np.linspace(-4, 4, 41)
        grid = axis[:, None] if dim == 1 else np.stack(np.meshgrid(axis, axis), axis=-1).reshape(-1, 2)
        worst = max(worst, mog_product_oracle(mixtures[0], mixtures[1], grid).max_abs_error)
    click.echo(f"max |g1 g2 - product mixture| over {n} pairs: {worst:.3e}")
    return worst < 1e-10


def _run_tasks(n, seed) -> bool:
    ok = True
    for name, spec in all_task_specs(seed).items():
        report = check_task_oracle(spec, n_specs=n)
        mark = '✅' if report.agrees else '❌'
        click.echo(f"  {mark} {name:<30} {report.checked - len(report.mismatches)}/{report.checked}")
        ok = ok and report.agrees
    return ok


@click.command('oracle')
@click.option('--kind', type=click.Choice(ORACLE_KINDS), required=True)
@click.option('--n', 'count', type=int, default=None, help='instances (dvar 200, mog_product 50, tasks 1000)')
@click.option('--samples', type=int, default=MC_KL_SAMPLES, show_default=True, help='monte-carlo samples for dvar')
@seed_option
@handle_errors
def oracle(kind, count, samples, seed):
    """numeric oracles: d_var bound, mixture product identity, task generators"""
    banner(f'oracle: {kind}')
    seed = 0 if seed is None else seed
    if kind == 'dvar':
        passed = _run_dvar(count or 200, seed, samples)
    elif kind == 'mog_product':
        passed = _run_mog_product(count or 50, seed)
    else:
        passed = _run_tasks(count or 1000, seed)

    if passed:
        success(f"\n✅ {kind} oracle passed")
    else:
        error(f"\n❌ {kind} oracle failed")
        sys.exit(EXIT_RUNTIME)
