# memlab/harness/management/base.py
"""shared click plumbing for the management commands"""
import functools
import logging
import sys

import click

from core.exceptions import ConfigError, MemlabError

logger = logging.getLogger(__name__)

EXIT_RUNTIME = 1


def banner(title: str):
    click.secho(f"=== {title.upper()} ===\n", fg='green', bold=True)


def success(message: str):
    click.secho(message, fg='green')


def warning(message: str):
    click.secho(message, fg='yellow')


def error(message: str):
    click.secho(message, fg='red', err=True)


def config_option(required: bool = True):
    return click.option('--config', 'config_path', required=required, type=click.Path(dir_okay=False),
                        help='experiment toml file, or a name under config/experiments')


seed_option = click.option('--seed', type=int, default=None, help='overrides the config seed')
out_option = click.option('--out', type=click.Path(), default=None, help='output directory or file')


def handle_errors(func):
    """runtime failures exit 1 with a one-line message; usage errors stay with click (exit 2)"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except FileNotFoundError as exc:
            error(f"❌ file not found: {exc.filename or exc}")
        except ConfigError as exc:
            error(f"❌ invalid config: {exc}")
        except MemlabError as exc:
            error(f"❌ {type(exc).__name__}: {exc}")
        logger.error(f"❌ {func.__name__} failed")
        sys.exit(EXIT_RUNTIME)
    return wrapper
