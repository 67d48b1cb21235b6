"""
Shared pieces of the command-line interface: run options, config loading,
error-to-exit-code mapping and rich consoles.
"""
import functools
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import click
from rich.console import Console
from rich.markup import escape

from onebit_unfold.config.logging import get_logger
from onebit_unfold.config.settings import RunConfig
from onebit_unfold.core.exceptions import OneBitCSException

logger = get_logger(__name__)

console = Console()
err_console = Console(stderr=True)

F = TypeVar("F", bound=Callable[..., Any])


def run_options(fn: F) -> F:
    """Attach ``--config``, ``--seed``, ``--out``, ``--threads`` and ``--deterministic``."""
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(path_type=Path, dir_okay=False),
            default=None,
            help="TOML run configuration with dotted keys (gen.n = 128).",
        ),
        click.option(
            "--seed",
            type=click.IntRange(min=0, max=2**64 - 1),
            default=None,
            help="Master seed; overrides the config file.",
        ),
        click.option(
            "--out",
            "output_dir",
            type=click.Path(path_type=Path, file_okay=False),
            default=None,
            help="Output directory; overrides the config file.",
        ),
        click.option(
            "--threads",
            type=click.IntRange(min=1),
            default=None,
            help="Worker threads (default: all cores).",
        ),
        click.option(
            "--deterministic",
            is_flag=True,
            default=False,
            help="Reduce gradients in a fixed order for bit-exact reruns.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def load_run_config(
    config_path: Optional[Path],
    seed: Optional[int],
    output_dir: Optional[Path],
    threads: Optional[int],
    deterministic: bool,
) -> RunConfig:
    """Load the config file (or defaults), apply flag overrides, create the output dir."""
    cfg = RunConfig.from_file(config_path) if config_path else RunConfig.from_mapping({})
    cfg = cfg.with_overrides(
        seed=seed,
        output_dir=str(output_dir) if output_dir is not None else None,
        threads=threads,
        deterministic=deterministic,
    )
    cfg.ensure_output_dir()
    logger.debug("run_config_loaded", source=str(config_path or "<defaults>"), seed=cfg.seed)
    return cfg


def exit_on_error(fn: F) -> F:
    """Report package errors on stderr and exit with the error's exit code."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except OneBitCSException as e:
            logger.error("command_failed", command=fn.__name__, **e.to_dict())
            err_console.print(f"[bold red]✗ {escape(e.error_code)}:[/bold red] {escape(e.message)}")
            for item in e.details.get("errors", []):
                err_console.print(f"  - {escape(str(item))}")
            raise click.exceptions.Exit(e.exit_code)

    return wrapper  # type: ignore[return-value]
