#!/usr/bin/env python
"""command-line entry point: train | eval | gen | analyze | oracle | plot-data"""
import sys

import click

from config.settings import configure_logging


@click.group(context_settings={'help_option_names': ['-h', '--help']})
def cli():
    """memlab experiment harness"""


def register_commands(group: click.Group) -> click.Group:
    from harness.management.commands.analyze import analyze
    from harness.management.commands.eval import evaluate
    from harness.management.commands.gen import gen
    from harness.management.commands.oracle import oracle
    from harness.management.commands.plot_data import plot_data
    from harness.management.commands.train import train

    for command in (train, evaluate, gen, analyze, oracle, plot_data):
        group.add_command(command)
    return group


register_commands(cli)


def main(argv=None) -> int:
    """run the cli and return its exit code"""
    configure_logging()
    try:
        cli.main(args=argv, prog_name='manage.py', standalone_mode=True)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 1)
    return 0


if __name__ == '__main__':
    sys.exit(main())
