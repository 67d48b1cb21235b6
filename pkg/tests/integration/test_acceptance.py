"""
Empirical trend checks at experiment scale.

Deselected by default; run with ``pytest -m acceptance``.
"""
from pathlib import Path

import numpy as np
import pytest

from onebit_unfold.config.settings import RunConfig
from onebit_unfold.core.models import GenConfig, NoiseModel
from onebit_unfold.data.generators import gen_dataset
from onebit_unfold.evaluation import METHOD_BIHT, METHOD_UNFOLDED, layerwise_experiment, sparsity_sweep
from onebit_unfold.evaluation.metrics import batch_nmse
from onebit_unfold.sensing.model import BihtConfig, biht_iterate

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"

pytestmark = pytest.mark.acceptance


@pytest.fixture
def fast_config(temp_dir) -> RunConfig:
    return RunConfig.from_file(CONFIG_DIR / "fast.toml").with_overrides(output_dir=temp_dir)


@pytest.fixture
def full_config(temp_dir) -> RunConfig:
    return RunConfig.from_file(CONFIG_DIR / "full.toml").with_overrides(output_dir=temp_dir)


def _assert_layerwise_trend(result) -> None:
    unfolded = result.mean_nmse[METHOD_UNFOLDED]
    biht = result.mean_nmse[METHOD_BIHT]

    for before, after in zip(unfolded, unfolded[1:]):
        assert after <= before + 0.01
    assert unfolded[-1] <= biht[-1]


class TestLayerwiseTrend:
    """Test the per-layer comparison at the fast and full scales."""

    def test_network_improves_per_layer_and_beats_biht(self, fast_config):
        """Test n=32, m=128, K=3 over 5 realizations."""
        _assert_layerwise_trend(layerwise_experiment(fast_config))

    def test_full_scale(self, full_config):
        """Test n=128, m=512, K=5, L=L'=10 over 20 realizations."""
        result = layerwise_experiment(full_config)

        assert result.realizations == 20
        assert len(result.axis) == 10
        _assert_layerwise_trend(result)


class TestSparsityTrend:
    """Test the sparsity sweep at the fast scale."""

    def test_network_degrades_slower(self, fast_config):
        result = sparsity_sweep(fast_config)
        unfolded = result.mean_nmse[METHOD_UNFOLDED]
        biht = result.mean_nmse[METHOD_BIHT]

        for u, b in zip(unfolded, biht):
            assert u <= b
        gaps = [b - u for u, b in zip(unfolded, biht)]
        assert gaps[result.axis.index(16)] >= gaps[result.axis.index(2)] - 0.02


class TestBihtSanity:
    """Test BIHT with the true matrix on noiseless data."""

    def test_noiseless_recovery(self):
        """Test n=128, m=512, K=3, step 1e-3, 50 iterations: mean NMSE < 0.05."""
        errors = []
        for realization in range(20):
            data = gen_dataset(
                GenConfig(n=128, m=512, k=3, samples=1, noise=NoiseModel.none(), seed=realization)
            )
            estimate, _ = biht_iterate(
                data.true_phi,
                data.bits,
                data.threshold,
                BihtConfig(sparsity=3, step_size=0.001, iterations=50),
            )
            errors.append(float(batch_nmse(estimate, data.signals)[0]))

        assert np.mean(errors) < 0.05
