from pathlib import Path
from typing import Optional

import click

from onebit_unfold.cli.common import exit_on_error, load_run_config, run_options
from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import ConfigurationError
from onebit_unfold.data import load_dataset
from onebit_unfold.training import load_checkpoint, save_checkpoint, train_stage1, train_stage2

logger = get_logger(__name__)


@click.command("train")
@run_options
@click.option("--stage", type=click.IntRange(1, 2), required=True, help="Training stage.")
@click.option(
    "--dataset",
    "dataset_dir",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Dataset directory written by datagen.",
)
@click.option(
    "--from-checkpoint",
    "checkpoint_path",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Stage-1 checkpoint (required for --stage 2).",
)
@exit_on_error
def train(
    config_path: Optional[Path],
    seed: Optional[int],
    output_dir: Optional[Path],
    threads: Optional[int],
    deterministic: bool,
    stage: int,
    dataset_dir: Path,
    checkpoint_path: Optional[Path],
) -> None:
    """
    Train one stage and write ``stage<N>.json`` under the output directory.

    Stage 1 learns the surrogate sensing matrix; stage 2 freezes it and learns
    per-layer step sizes. Prints the final epoch loss.
    """
    cfg = load_run_config(config_path, seed, output_dir, threads, deterministic)
    if stage == 2 and checkpoint_path is None:
        raise ConfigurationError("--stage 2 requires --from-checkpoint with a stage-1 checkpoint")

    dataset = load_dataset(dataset_dir)
    if stage == 1:
        model = train_stage1(dataset, cfg.stage_for(1))
    else:
        assert checkpoint_path is not None
        stage1_model = load_checkpoint(checkpoint_path)
        if stage1_model.stage != 1:
            raise ConfigurationError(
                f"{checkpoint_path} is a stage-{stage1_model.stage} checkpoint; stage 2 "
                "continues from a stage-1 checkpoint"
            )
        model = train_stage2(dataset, stage1_model, cfg.stage_for(2))

    target = save_checkpoint(model, Path(cfg.output_dir) / f"stage{stage}.json")
    logger.info("train_command_complete", stage=stage, checkpoint=str(target))
    click.echo(repr(model.history[-1]))
