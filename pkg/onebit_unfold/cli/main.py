"""
Command-line entry point.

Exit codes: 0 ok, 2 invalid configuration or inputs, 3 file I/O failure,
4 training diverged.
"""
from typing import Optional

import click

from onebit_unfold import __version__
from onebit_unfold.cli.commands.datagen import datagen
from onebit_unfold.cli.commands.evaluate import evaluate
from onebit_unfold.cli.commands.inspect import inspect
from onebit_unfold.cli.commands.reproduce import reproduce
from onebit_unfold.cli.commands.train import train
from onebit_unfold.config.logging import setup_logging


@click.group()
@click.version_option(__version__, prog_name="onebit-unfold")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    default=None,
    help="Override ONEBIT_LOG_LEVEL for this run.",
)
@click.option(
    "--log-format",
    type=click.Choice(["json", "text", "console"], case_sensitive=False),
    default=None,
    help="Override ONEBIT_LOG_FORMAT for this run.",
)
def cli(log_level: Optional[str], log_format: Optional[str]) -> None:
    """Blind one-bit compressive sensing with a deep-unfolded BIHT network."""
    if log_level or log_format:
        setup_logging(level=log_level, format_type=log_format)


cli.add_command(datagen)
cli.add_command(train)
cli.add_command(evaluate)
cli.add_command(reproduce)
cli.add_command(inspect)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
