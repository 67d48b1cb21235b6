"""
Tests for checkpoint documents.
"""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from onebit_unfold.core.exceptions import DataIOError
from onebit_unfold.core.models import TrainingConfig
from onebit_unfold.training.checkpoint import (
    checkpoint_json,
    load_checkpoint,
    save_checkpoint,
    to_document,
)
from onebit_unfold.training.trainer import train_stage1, train_stage2


@pytest.fixture
def stage2_model(small_dataset, stage1_config, stage2_config):
    stage1 = train_stage1(small_dataset, stage1_config)
    return train_stage2(small_dataset, stage1, stage2_config)


class TestCheckpoint:
    """Test checkpoint save and load."""

    def test_exact_round_trip(self, stage2_model, temp_dir):
        """Test every parameter survives bit for bit."""
        path = save_checkpoint(stage2_model, Path(temp_dir) / "nested" / "stage2.json")
        loaded = load_checkpoint(path)

        np.testing.assert_array_equal(loaded.params.phi, stage2_model.params.phi)
        np.testing.assert_array_equal(loaded.params.step_sizes, stage2_model.params.step_sizes)
        np.testing.assert_array_equal(loaded.params.threshold, stage2_model.params.threshold)
        assert loaded.history == stage2_model.history
        assert loaded.config == stage2_model.config
        assert loaded.full_depth == stage2_model.full_depth
        assert checkpoint_json(loaded) == checkpoint_json(stage2_model)

    def test_document_layout(self, stage2_model):
        doc = json.loads(checkpoint_json(stage2_model))

        assert doc["stage"] == 2
        assert (doc["m"], doc["n"], doc["L"], doc["L_prime"], doc["k"]) == (32, 8, 4, 4, 2)
        assert len(doc["phi"]) == 32 * 8
        assert doc["phi"][1] == stage2_model.params.phi[0, 1]
        assert "lambda" in doc["training_config"]
        assert doc["dataset_meta"]["config"]["seed"] == 3

    def test_infinite_clip_is_null(self, small_dataset, temp_dir):
        cfg = TrainingConfig(stage=1, epochs=1, batch_size=50, depth=2, ste_clip=None)
        model = train_stage1(small_dataset, cfg)

        assert to_document(model).ste_clip is None
        path = save_checkpoint(model, Path(temp_dir) / "c.json")
        assert math.isinf(load_checkpoint(path).params.ste_clip)

    def test_missing_file(self, temp_dir):
        with pytest.raises(DataIOError):
            load_checkpoint(Path(temp_dir) / "absent.json")

    def test_invalid_document(self, temp_dir):
        path = Path(temp_dir) / "bad.json"
        path.write_text('{"stage": 3}', encoding="utf-8")

        with pytest.raises(DataIOError) as excinfo:
            load_checkpoint(path)
        assert excinfo.value.details["errors"]
