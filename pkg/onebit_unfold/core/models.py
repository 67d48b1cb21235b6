"""
Configuration and document models for onebit-unfold.

These pydantic models carry everything that is read from config files or
written to disk: generation and training settings, dataset metadata,
checkpoints and experiment results. Numeric working data (matrices, caches)
lives in plain numpy-backed dataclasses next to the code that uses it.
"""
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FORMAT_VERSION = 1


def default_step_size(m: int) -> float:
    """Step size 1 / (2m), matched to N(0, 1) matrices with m rows."""
    return 0.5 / m


class NoiseKind(str, Enum):
    """Enumeration of additive noise models."""

    NONE = "none"
    IID = "iid"
    FULL = "full"


class NoiseModel(BaseModel):
    """Additive Gaussian measurement noise: none, i.i.d. or full covariance."""

    model_config = ConfigDict(extra="forbid")

    kind: NoiseKind = Field(default=NoiseKind.IID)
    variance: float = Field(default=1.0, ge=0.0, description="Per-entry variance")
    covariance: Optional[List[List[float]]] = Field(
        default=None, description="Explicit m x m covariance for kind=full"
    )
    correlation: Optional[float] = Field(
        default=None,
        gt=-1.0,
        lt=1.0,
        description="Toeplitz correlation variance * correlation^|i-j| for kind=full",
    )

    @model_validator(mode="after")
    def validate_full_covariance(self) -> "NoiseModel":
        """A full model needs exactly one of covariance or correlation."""
        if self.kind == NoiseKind.FULL:
            if (self.covariance is None) == (self.correlation is None):
                raise ValueError("full noise needs exactly one of covariance or correlation")
            if self.covariance is not None:
                size = len(self.covariance)
                if any(len(row) != size for row in self.covariance):
                    raise ValueError("covariance must be a square matrix")
            elif self.variance <= 0.0:
                raise ValueError("correlated noise needs a positive variance")
        return self

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(kind=NoiseKind.NONE)

    @classmethod
    def iid(cls, variance: float) -> "NoiseModel":
        return cls(kind=NoiseKind.IID, variance=variance)

    @classmethod
    def full(cls, covariance: List[List[float]]) -> "NoiseModel":
        return cls(kind=NoiseKind.FULL, covariance=covariance)


class GenConfig(BaseModel):
    """Synthetic dataset generation settings."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=128, ge=1, description="Signal length")
    m: int = Field(default=512, ge=1, description="Number of one-bit measurements")
    k: int = Field(default=5, ge=1, description="Sparsity level K of generated signals")
    samples: int = Field(default=1000, ge=1, description="Number of pairs B")
    noise: NoiseModel = Field(default_factory=NoiseModel)
    threshold: Union[float, List[float]] = Field(
        default=0.0, description="Quantization threshold: scalar or length-m vector"
    )
    normalize_signals: bool = Field(default=True)
    seed: int = Field(default=0, ge=0, le=2**64 - 1)

    @model_validator(mode="after")
    def validate_dimensions(self) -> "GenConfig":
        """Check sparsity, threshold and covariance sizes against n and m."""
        if self.k > self.n:
            raise ValueError(f"k ({self.k}) must not exceed n ({self.n})")
        if isinstance(self.threshold, list) and len(self.threshold) != self.m:
            raise ValueError(
                f"threshold has {len(self.threshold)} entries, expected m = {self.m}"
            )
        if self.noise.covariance is not None and len(self.noise.covariance) != self.m:
            raise ValueError(
                f"noise covariance is {len(self.noise.covariance)}x"
                f"{len(self.noise.covariance)}, expected m = {self.m}"
            )
        return self

    def threshold_vector(self) -> List[float]:
        if isinstance(self.threshold, list):
            return [float(t) for t in self.threshold]
        return [float(self.threshold)] * self.m


class TrainingConfig(BaseModel):
    """
    Settings of one training stage.

    Stage 1 learns the surrogate sensing matrix with a shared step size over
    ``depth`` layers; stage 2 learns per-layer step sizes over the first
    ``depth_prime`` layers with the matrix frozen.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    stage: Literal[1, 2] = Field(default=1)
    epochs: int = Field(default=200, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=1e-4, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    shared_alpha: Optional[float] = Field(
        default=None, description="Stage-1 step size of every layer (defaults to 1 / (2m))"
    )
    phi_init: Literal["gaussian", "correlation"] = Field(
        default="gaussian",
        description="Stage-1 start: N(0, 1) draws or the sign-correlation estimate of the data",
    )
    depth: int = Field(default=10, ge=1, description="Layer count L")
    depth_prime: Optional[int] = Field(
        default=None, ge=1, description="Stage-2 layer count L' (defaults to L)"
    )
    lam: float = Field(default=1.0, ge=0.0, alias="lambda")
    initial_step_sizes: Optional[List[float]] = Field(default=None)
    sparsity: Optional[int] = Field(
        default=None, ge=0, description="Network sparsity k (defaults to gen.k)"
    )
    normalize_per_layer: bool = Field(default=True)
    ste_clip: Optional[float] = Field(
        default=1.0, gt=0.0, description="STE clip c; null or inf disables clipping"
    )
    threads: int = Field(default=1, ge=1)
    deterministic_reduction: bool = Field(default=True)
    seed: int = Field(default=0, ge=0, le=2**64 - 1)

    @field_validator("initial_step_sizes")
    @classmethod
    def validate_step_sizes(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and len(v) == 0:
            raise ValueError("initial_step_sizes must not be empty")
        return v

    def effective_depth_prime(self, full_depth: int) -> int:
        return self.depth_prime if self.depth_prime is not None else full_depth

    @property
    def clip(self) -> float:
        return float("inf") if self.ste_clip is None else float(self.ste_clip)

    def network_sparsity(self, default: int) -> int:
        return self.sparsity if self.sparsity is not None else default

    def resolved_alpha(self, m: int) -> float:
        return self.shared_alpha if self.shared_alpha is not None else default_step_size(m)


def default_stage2_config() -> TrainingConfig:
    return TrainingConfig(stage=2, epochs=100)


class ExperimentConfig(BaseModel):
    """Settings of the layer-wise and sparsity-sweep experiments."""

    model_config = ConfigDict(extra="forbid")

    realizations: int = Field(default=20, ge=1)
    test_samples: int = Field(default=200, ge=1)
    k_values: List[int] = Field(default_factory=lambda: [2, 4, 6, 8, 10, 12, 14, 16])
    biht_step_size: Optional[float] = Field(
        default=None, gt=0.0, description="Baseline step size (defaults to 1 / (2m))"
    )
    biht_normalize: bool = Field(default=True)
    training_rounds: int = Field(
        default=1, ge=1, description="Alternating stage-1/stage-2 rounds per realization"
    )

    @field_validator("k_values")
    @classmethod
    def validate_k_values(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("k_values must not be empty")
        if any(k < 1 for k in v):
            raise ValueError("k_values must be positive")
        return v

    def biht_step_for(self, m: int) -> float:
        return self.biht_step_size if self.biht_step_size is not None else default_step_size(m)


class DatasetMeta(BaseModel):
    """Metadata document stored next to a serialized dataset."""

    format_version: int = Field(default=FORMAT_VERSION)
    split: Literal["train", "test"] = Field(default="train")
    config: GenConfig
    threshold: List[float]
    samples: int = Field(..., ge=1)


class CheckpointDocument(BaseModel):
    """On-disk form of a trained model."""

    format_version: int = Field(default=FORMAT_VERSION)
    stage: Literal[1, 2]
    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    L: int = Field(..., ge=1)
    L_prime: int = Field(..., ge=1)
    k: int = Field(..., ge=0)
    tau: List[float]
    normalize_per_layer: bool
    ste_clip: Optional[float] = Field(..., description="null means no clipping")
    phi: List[float] = Field(..., description="Row-major m x n surrogate matrix")
    step_sizes: List[float]
    training_config: Dict[str, Any]
    dataset_meta: Dict[str, Any]
    loss_history: List[float]

    @model_validator(mode="after")
    def validate_shapes(self) -> "CheckpointDocument":
        if len(self.phi) != self.m * self.n:
            raise ValueError(f"phi has {len(self.phi)} entries, expected {self.m * self.n}")
        if len(self.tau) != self.m:
            raise ValueError(f"tau has {len(self.tau)} entries, expected {self.m}")
        if len(self.step_sizes) != self.L_prime or self.L_prime > self.L:
            raise ValueError("step_sizes length must equal L_prime and L_prime <= L")
        return self


class RawRecord(BaseModel):
    """One realization's NMSE for one method at one axis point."""

    axis: int
    method: str
    realization: int
    nmse: float = Field(..., ge=0.0)


class ExperimentResult(BaseModel):
    """Mean and per-realization NMSE series of an experiment."""

    name: str
    axis_name: str
    axis: List[int]
    methods: List[str]
    mean_nmse: Dict[str, List[float]]
    realizations: int = Field(..., ge=1)
    raw: List[RawRecord] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_series(self) -> "ExperimentResult":
        for method in self.methods:
            series = self.mean_nmse.get(method)
            if series is None or len(series) != len(self.axis):
                raise ValueError(f"series for {method} must have one value per axis point")
        return self

    def recompute_means(self) -> Dict[str, List[float]]:
        """Means rebuilt from the raw table, in the same summation order."""
        sums: Dict[str, List[float]] = {
            method: [0.0] * len(self.axis) for method in self.methods
        }
        position = {value: i for i, value in enumerate(self.axis)}
        for record in self.raw:
            sums[record.method][position[record.axis]] += record.nmse
        return {
            method: [total / self.realizations for total in totals]
            for method, totals in sums.items()
        }
