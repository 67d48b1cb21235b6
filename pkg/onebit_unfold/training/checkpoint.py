"""
TrainedModel checkpoints as JSON documents.

Floats are written with Python's shortest round-trip representation (at most
17 significant digits), so a save/load cycle reproduces every parameter bit
for bit.
"""
import math
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import DataIOError
from onebit_unfold.core.models import CheckpointDocument, TrainingConfig
from onebit_unfold.network.unfolded import UnfoldedParams
from onebit_unfold.training.trainer import TrainedModel

logger = get_logger(__name__)

PathLike = Union[str, Path]


def to_document(model: TrainedModel) -> CheckpointDocument:
    params = model.params
    clip = params.ste_clip
    return CheckpointDocument(
        stage=model.config.stage,
        m=params.m,
        n=params.n,
        L=model.full_depth,
        L_prime=params.depth,
        k=params.sparsity,
        tau=[float(t) for t in params.threshold],
        normalize_per_layer=params.normalize_per_layer,
        ste_clip=None if math.isinf(clip) else float(clip),
        phi=[float(v) for v in params.phi.ravel(order="C")],
        step_sizes=[float(a) for a in params.step_sizes],
        training_config=model.config.model_dump(mode="json", by_alias=True),
        dataset_meta=model.dataset_meta,
        loss_history=[float(v) for v in model.history],
    )


def from_document(doc: CheckpointDocument) -> TrainedModel:
    params = UnfoldedParams(
        phi=np.asarray(doc.phi, dtype=np.float64).reshape(doc.m, doc.n),
        step_sizes=np.asarray(doc.step_sizes, dtype=np.float64),
        sparsity=doc.k,
        threshold=np.asarray(doc.tau, dtype=np.float64),
        normalize_per_layer=doc.normalize_per_layer,
        ste_clip=math.inf if doc.ste_clip is None else doc.ste_clip,
    )
    return TrainedModel(
        params=params,
        history=list(doc.loss_history),
        config=TrainingConfig.model_validate(doc.training_config),
        dataset_meta=doc.dataset_meta,
        full_depth=doc.L,
    )


def checkpoint_json(model: TrainedModel) -> str:
    return to_document(model).model_dump_json(indent=2) + "\n"


def save_checkpoint(model: TrainedModel, path: PathLike) -> Path:
    """Write a checkpoint file, creating parent directories."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(checkpoint_json(model), encoding="utf-8")
    except OSError as e:
        logger.error("checkpoint_write_failed", path=str(target), error=str(e))
        raise DataIOError(f"Failed to write checkpoint {target}: {e}")
    logger.info("checkpoint_saved", path=str(target), stage=model.stage)
    return target


def load_checkpoint(path: PathLike) -> TrainedModel:
    """Read a checkpoint file written by ``save_checkpoint``."""
    source = Path(path)
    try:
        doc = CheckpointDocument.model_validate_json(source.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataIOError(f"Failed to read checkpoint {source}: {e}")
    except PydanticValidationError as e:
        raise DataIOError(
            f"Invalid checkpoint {source}",
            details={"errors": [err["msg"] for err in e.errors()]},
        )
    return from_document(doc)
