# memlab/harness/management/commands/analyze.py
import click

from capacity.analysis import (CapacityParams, brute_force_optimal_schedule, capacity_of_schedule,
                               capacity_upper_bound)
from core.services.trace_service import write_csv
from harness.management.base import banner, handle_errors, success, warning
from scheduling.schedules import make_schedule


@click.command('analyze')
@click.option('--T', 'T', type=int, required=True, help='sequence length')
@click.option('--D', 'D', type=int, required=True, help='number of memory writes')
@click.option('--lambda', 'lam', type=float, required=True, help='contribution decay')
@click.option('--C', 'C', type=float, default=1.0, show_default=True)
@click.option('--allow-exploding', is_flag=True, help='permit lambda > 1')
@click.option('--n-jobs', type=int, default=None)
@click.option('--out', type=click.Path(dir_okay=False), default=None,
              help='csv with every enumerated schedule and its score')
@handle_errors
def analyze(T, D, lam, C, allow_exploding, n_jobs, out):
    """exhaustive search for the schedule with the largest average contribution"""
    banner('capacity analysis')
    params = CapacityParams(lam=lam, T=T, D=D, C=C, allow_exploding=allow_exploding)
    result = brute_force_optimal_schedule(params, n_jobs=n_jobs, keep_all=out is not None)
    best = result.best
    bound = capacity_upper_bound(params)

    steps = ','.join(str(t) for t in best.schedule.sorted_steps())
    click.echo(f"T={T} D={D} lambda={lam}: {result.evaluated} schedules evaluated")
    success(f"argmax schedule {{{steps}}}  I = {best.score:.12f}")
    if len(result.ties) > 1:
        warning(f"⚠️ {len(result.ties)} schedules tie at the maximum")
    click.echo(f"upper bound g = {bound:.12f}")

    if D + 1 <= T:
        uniform = capacity_of_schedule(make_schedule('uniform', T, D, final_write=False), params)
        click.echo(f"uniform schedule {set(uniform.schedule.sorted_steps())}  I = {uniform.score:.12f}")

    if out:
        tied = {tuple(s.schedule.sorted_steps()) for s in result.ties}
        rows = []
        for scored in result.scores:
            sched = tuple(scored.schedule.sorted_steps())
            rows.append((' '.join(map(str, sched)), ' '.join(map(str, scored.intervals)),
                         repr(scored.score), repr(bound), int(sched in tied)))
        write_csv(out, ('schedule', 'intervals', 'capacity', 'upper_bound', 'is_argmax'), rows)
        success(f"✅ {len(rows)} schedules written to {out}")
