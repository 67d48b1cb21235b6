from pathlib import Path
from typing import List, Optional

import click
from rich.table import Table

from onebit_unfold.cli.common import console, exit_on_error, load_run_config, run_options
from onebit_unfold.core.exceptions import ConfigurationError
from onebit_unfold.core.models import ExperimentResult
from onebit_unfold.evaluation import layerwise_experiment, sparsity_sweep, write_experiment


def _parse_k_values(raw: Optional[str]) -> Optional[List[int]]:
    if raw is None:
        return None
    try:
        values = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"--k-values must be comma separated integers, got {raw!r}")
    if not values:
        raise ConfigurationError("--k-values is empty")
    return values


def _summary_table(result: ExperimentResult) -> Table:
    table = Table(title=f"{result.name}: mean NMSE over {result.realizations} realization(s)")
    table.add_column(result.axis_name.capitalize(), justify="right")
    for method in result.methods:
        table.add_column(method, justify="right")
    for i, point in enumerate(result.axis):
        table.add_row(str(point), *(f"{result.mean_nmse[m][i]:.6f}" for m in result.methods))
    return table


@click.command("reproduce")
@click.argument("figure", type=click.Choice(["fig1", "fig2"]))
@run_options
@click.option(
    "--realizations",
    type=click.IntRange(min=1),
    default=None,
    help="Override experiment.realizations.",
)
@click.option(
    "--k-values",
    default=None,
    help="Comma separated sparsity levels for fig2 (overrides experiment.k_values).",
)
@click.option("--no-svg", is_flag=True, default=False, help="Skip the SVG chart.")
@exit_on_error
def reproduce(
    figure: str,
    config_path: Optional[Path],
    seed: Optional[int],
    output_dir: Optional[Path],
    threads: Optional[int],
    deterministic: bool,
    realizations: Optional[int],
    k_values: Optional[str],
    no_svg: bool,
) -> None:
    """
    Run an experiment end to end and write its CSV, raw CSV, JSON and SVG.

    fig1 compares NMSE per layer / iteration; fig2 sweeps the sparsity level.
    """
    cfg = load_run_config(config_path, seed, output_dir, threads, deterministic)
    if figure == "fig1":
        result = layerwise_experiment(cfg, realizations=realizations)
    else:
        result = sparsity_sweep(cfg, k_values=_parse_k_values(k_values), realizations=realizations)

    formats = ("csv",) if no_svg else ("csv", "svg")
    written = write_experiment(result, cfg.output_dir, figure, formats=formats)
    console.print(_summary_table(result))
    for kind, path in written.items():
        console.print(f"✓ {kind}: {path}")
