"""
Dataset serialization.

A dataset directory holds:
- meta.json: generation config, split, thresholds and sample count
- signals.csv: B rows x n columns of decimal floats
- bits.csv: B rows x m columns of 1 / -1
The true sensing matrix is not stored; it is rebuilt from the recorded seed.
"""
import hashlib
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import DataIOError
from onebit_unfold.core.models import DatasetMeta
from onebit_unfold.data.generators import Dataset, regenerate_sensing_matrix

logger = get_logger(__name__)

META_FILE = "meta.json"
SIGNALS_FILE = "signals.csv"
BITS_FILE = "bits.csv"

PathLike = Union[str, Path]


def save_dataset(dataset: Dataset, directory: PathLike) -> str:
    """
    Write a dataset directory and return its digest.

    Args:
        dataset: Dataset to serialize
        directory: Target directory, created if missing

    Returns:
        SHA-256 hex digest of the written files
    """
    target = Path(directory)
    try:
        target.mkdir(parents=True, exist_ok=True)
        (target / META_FILE).write_text(
            dataset.meta().model_dump_json(indent=2) + "\n", encoding="utf-8"
        )
        np.savetxt(target / SIGNALS_FILE, dataset.signals, fmt="%.17g", delimiter=",")
        np.savetxt(target / BITS_FILE, dataset.bits.astype(np.int64), fmt="%d", delimiter=",")
    except OSError as e:
        error_msg = f"Failed to write dataset to {target}: {e}"
        logger.error("dataset_write_failed", path=str(target), error=str(e))
        raise DataIOError(error_msg)

    digest = dataset_digest(target)
    logger.info("dataset_saved", path=str(target), samples=dataset.size, digest=digest)
    return digest


def dataset_digest(directory: PathLike) -> str:
    """SHA-256 over the meta, signals and bits files, in that order."""
    source = Path(directory)
    sha = hashlib.sha256()
    try:
        for name in (META_FILE, SIGNALS_FILE, BITS_FILE):
            sha.update(name.encode("utf-8"))
            sha.update((source / name).read_bytes())
    except OSError as e:
        raise DataIOError(f"Failed to read dataset files in {source}: {e}")
    return sha.hexdigest()


def load_dataset(directory: PathLike) -> Dataset:
    """
    Load a dataset directory written by ``save_dataset``.

    Raises:
        DataIOError: if a file is missing, unreadable or inconsistent
    """
    source = Path(directory)
    try:
        meta = DatasetMeta.model_validate_json(
            (source / META_FILE).read_text(encoding="utf-8")
        )
        signals = np.loadtxt(source / SIGNALS_FILE, delimiter=",", ndmin=2, dtype=np.float64)
        bits = np.loadtxt(source / BITS_FILE, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError, PydanticValidationError) as e:
        error_msg = f"Failed to load dataset from {source}: {e}"
        logger.error("dataset_load_failed", path=str(source), error=str(e))
        raise DataIOError(error_msg)

    if signals.shape != (meta.samples, meta.config.n) or bits.shape != (
        meta.samples,
        meta.config.m,
    ):
        raise DataIOError(
            f"Dataset tables in {source} do not match meta.json",
            details={
                "signals": list(signals.shape),
                "bits": list(bits.shape),
                "samples": meta.samples,
            },
        )

    dataset = Dataset(
        signals=signals,
        bits=bits,
        true_phi=regenerate_sensing_matrix(meta.config),
        threshold=np.asarray(meta.threshold, dtype=np.float64),
        config=meta.config,
        split=meta.split,
    )
    logger.info("dataset_loaded", path=str(source), samples=dataset.size, split=meta.split)
    return dataset
