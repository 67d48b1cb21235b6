"""
onebit-unfold - Blind one-bit compressive sensing with a deep-unfolded BIHT network

Generates synthetic one-bit measurements, learns a surrogate sensing matrix and
per-layer step sizes with hand-written gradients, and benchmarks recovery
against BIHT run with the true sensing matrix.
"""

__version__ = "0.1.0"
__description__ = "Blind one-bit compressive sensing via deep-unfolded BIHT"

# Import main components for easy access
from onebit_unfold.config.settings import RunConfig, get_settings
from onebit_unfold.config.logging import setup_logging, get_logger
from onebit_unfold.core.exceptions import OneBitCSException
from onebit_unfold.core.models import (
    ExperimentResult,
    GenConfig,
    NoiseModel,
    TrainingConfig,
)
from onebit_unfold.data import Dataset, gen_dataset, load_dataset, save_dataset
from onebit_unfold.network import UnfoldedParams, recover
from onebit_unfold.sensing import BihtConfig, MeasurementSet, biht_iterate
from onebit_unfold.training import TrainedModel, train_stage1, train_stage2

# Configure logging when package is imported
import os
if not os.getenv("ONEBIT_UNFOLD_NO_AUTO_LOGGING"):
    try:
        setup_logging()
    except Exception:
        # Silently fail if logging setup fails during import
        pass

__all__ = [
    "__version__",
    "__description__",
    "get_settings",
    "setup_logging",
    "get_logger",
    "OneBitCSException",
    "RunConfig",
    "ExperimentResult",
    "GenConfig",
    "NoiseModel",
    "TrainingConfig",
    "Dataset",
    "gen_dataset",
    "load_dataset",
    "save_dataset",
    "UnfoldedParams",
    "recover",
    "BihtConfig",
    "MeasurementSet",
    "biht_iterate",
    "TrainedModel",
    "train_stage1",
    "train_stage2",
]
