from pathlib import Path

import click
import numpy as np
from rich.table import Table

from onebit_unfold.cli.common import console, exit_on_error
from onebit_unfold.training import load_checkpoint


@click.command("inspect")
@click.argument("checkpoint_path", type=click.Path(path_type=Path, dir_okay=False))
@exit_on_error
def inspect(checkpoint_path: Path) -> None:
    """Summarize a checkpoint: shapes, step sizes and training history."""
    model = load_checkpoint(checkpoint_path)
    params = model.params

    table = Table(title=str(checkpoint_path), show_header=False)
    table.add_column("Field", style="bold")
    table.add_column("Value")
    table.add_row("stage", str(model.stage))
    table.add_row("m x n", f"{params.m} x {params.n}")
    table.add_row("L / L'", f"{model.full_depth} / {params.depth}")
    table.add_row("k", str(params.sparsity))
    table.add_row("normalize_per_layer", str(params.normalize_per_layer))
    table.add_row("ste_clip", str(params.ste_clip))
    table.add_row("||phi||_F", f"{float(np.linalg.norm(params.phi)):.6g}")
    table.add_row("step_sizes", ", ".join(f"{a:.6g}" for a in params.step_sizes))
    table.add_row("epochs", str(len(model.history)))
    if model.history:
        table.add_row("loss first / last", f"{model.history[0]:.6g} / {model.history[-1]:.6g}")
    table.add_row("dataset seed", str(model.dataset_meta.get("config", {}).get("seed", "?")))
    console.print(table)
