from pathlib import Path
from typing import Optional

import click

from onebit_unfold.cli.common import exit_on_error, load_run_config, run_options
from onebit_unfold.data import gen_dataset, save_dataset


@click.command("datagen")
@run_options
@click.option(
    "--split",
    type=click.Choice(["train", "test"]),
    default="train",
    show_default=True,
    help="Training pairs or held-out test pairs (same true sensing matrix).",
)
@click.option(
    "--samples",
    type=click.IntRange(min=1),
    default=None,
    help="Number of pairs (default: gen.samples, or experiment.test_samples for --split test).",
)
@exit_on_error
def datagen(
    config_path: Optional[Path],
    seed: Optional[int],
    output_dir: Optional[Path],
    threads: Optional[int],
    deterministic: bool,
    split: str,
    samples: Optional[int],
) -> None:
    """Generate a one-bit dataset and print its digest."""
    cfg = load_run_config(config_path, seed, output_dir, threads, deterministic)
    if samples is None and split == "test":
        samples = cfg.experiment.test_samples

    dataset = gen_dataset(cfg.gen, split=split, samples=samples)
    target = Path(cfg.output_dir) / ("dataset" if split == "train" else "dataset_test")
    click.echo(save_dataset(dataset, target))
