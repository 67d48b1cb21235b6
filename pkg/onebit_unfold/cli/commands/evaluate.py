from pathlib import Path
from typing import Optional

import click
from rich.table import Table

from onebit_unfold.cli.common import console, exit_on_error, load_run_config, run_options
from onebit_unfold.data import load_dataset
from onebit_unfold.evaluation import (
    METHOD_BIHT,
    METHOD_UNFOLDED,
    evaluate_model,
    single_model_result,
    write_experiment,
)
from onebit_unfold.training import load_checkpoint


@click.command("eval")
@run_options
@click.option(
    "--checkpoint",
    "checkpoint_path",
    type=click.Path(path_type=Path, dir_okay=False),
    required=True,
    help="Trained model checkpoint.",
)
@click.option(
    "--dataset",
    "dataset_dir",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Dataset directory to evaluate on (normally a --split test dataset).",
)
@exit_on_error
def evaluate(
    config_path: Optional[Path],
    seed: Optional[int],
    output_dir: Optional[Path],
    threads: Optional[int],
    deterministic: bool,
    checkpoint_path: Path,
    dataset_dir: Path,
) -> None:
    """Per-layer NMSE of a trained model against true-matrix BIHT."""
    cfg = load_run_config(config_path, seed, output_dir, threads, deterministic)
    model = load_checkpoint(checkpoint_path)
    dataset = load_dataset(dataset_dir)

    evaluation = evaluate_model(model.params, dataset, cfg.experiment)
    config = {
        "checkpoint": str(checkpoint_path),
        "dataset": str(dataset_dir),
        "dataset_meta": dataset.meta().model_dump(mode="json"),
        "experiment": cfg.experiment.model_dump(mode="json"),
    }
    result = single_model_result(evaluation, config)
    write_experiment(result, cfg.output_dir, "eval")

    table = Table(title=f"NMSE on {dataset.size} pairs")
    table.add_column("Layer", justify="right")
    table.add_column("Unfolded (blind)", justify="right")
    table.add_column("BIHT (true matrix)", justify="right")
    for i, layer in enumerate(result.axis):
        table.add_row(
            str(layer),
            f"{result.mean_nmse[METHOD_UNFOLDED][i]:.6f}",
            f"{result.mean_nmse[METHOD_BIHT][i]:.6f}",
        )
    console.print(table)
    console.print(
        f"Mean consistency objective: unfolded {evaluation.unfolded_consistency:.6g}, "
        f"biht {evaluation.biht_consistency:.6g}"
    )
