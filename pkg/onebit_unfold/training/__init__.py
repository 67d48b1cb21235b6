from onebit_unfold.training.checkpoint import load_checkpoint, save_checkpoint
from onebit_unfold.training.optim import AdamState, adam_step
from onebit_unfold.training.trainer import (
    TrainedModel,
    correlation_phi,
    loss_stage1,
    loss_stage2,
    train_alternating,
    train_stage1,
    train_stage2,
)

__all__ = [
    "AdamState",
    "TrainedModel",
    "adam_step",
    "correlation_phi",
    "load_checkpoint",
    "loss_stage1",
    "loss_stage2",
    "save_checkpoint",
    "train_alternating",
    "train_stage1",
    "train_stage2",
]
