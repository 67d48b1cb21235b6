"""
Pytest configuration and shared fixtures.
"""
import os

# quiet structured logs on stderr for the whole session
os.environ.setdefault("ONEBIT_LOG_LEVEL", "WARNING")
os.environ.setdefault("ONEBIT_ENVIRONMENT", "testing")

import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, Generator

import pytest

from onebit_unfold.config.settings import RunConfig, Settings, get_test_settings
from onebit_unfold.core.models import GenConfig, NoiseModel, TrainingConfig
from onebit_unfold.data.generators import Dataset, gen_dataset


@pytest.fixture
def temp_dir() -> Generator[str, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


@pytest.fixture
def test_settings(temp_dir: str) -> Settings:
    """Create test settings writing under a temporary directory."""
    return get_test_settings(output_dir=os.path.join(temp_dir, "runs"))


@pytest.fixture
def small_gen_config() -> GenConfig:
    """Small noisy generation config: n=8, m=32, K=2, B=50."""
    return GenConfig(n=8, m=32, k=2, samples=50, noise=NoiseModel.iid(0.01), seed=3)


@pytest.fixture
def small_dataset(small_gen_config: GenConfig) -> Dataset:
    return gen_dataset(small_gen_config)


@pytest.fixture
def stage1_config() -> TrainingConfig:
    """Fast stage-1 config for unit tests."""
    return TrainingConfig(stage=1, epochs=3, batch_size=25, lr=1e-2, depth=4, seed=3)


@pytest.fixture
def stage2_config() -> TrainingConfig:
    """Fast stage-2 config for unit tests."""
    return TrainingConfig(stage=2, epochs=3, batch_size=25, lr=1e-2, depth=4, seed=3)


def tiny_run_mapping(**overrides: Any) -> Dict[str, Any]:
    """Run config mapping small enough for end-to-end tests in seconds."""
    data: Dict[str, Any] = {
        "seed": 11,
        "threads": 1,
        "deterministic": True,
        "gen": {"n": 8, "m": 16, "k": 2, "samples": 20, "noise": {"kind": "iid", "variance": 0.01}},
        "stage1": {"epochs": 2, "batch_size": 10, "lr": 1e-2, "depth": 3},
        "stage2": {"epochs": 2, "batch_size": 10, "lr": 1e-2},
        "experiment": {"realizations": 2, "test_samples": 10, "k_values": [1, 2]},
    }
    data.update(overrides)
    return data


@pytest.fixture
def tiny_run_config(temp_dir: str) -> RunConfig:
    return RunConfig.from_mapping(tiny_run_mapping(output_dir=os.path.join(temp_dir, "out")))


TINY_TOML = """\
seed = 11
threads = 1
deterministic = true

[gen]
n = 8
m = 16
k = 2
samples = 20
noise.kind = "iid"
noise.variance = 0.01

[stage1]
epochs = 2
batch_size = 10
lr = 1e-2
depth = 3

[stage2]
epochs = 2
batch_size = 10
lr = 1e-2

[experiment]
realizations = 2
test_samples = 10
k_values = [1, 2]
"""


@pytest.fixture
def write_config(temp_dir: str) -> Callable[[str], Path]:
    """Write TOML text to a config file and return its path."""

    def _write(text: str = TINY_TOML, name: str = "run.toml") -> Path:
        path = Path(temp_dir) / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
