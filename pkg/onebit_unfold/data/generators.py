"""
Synthetic one-bit sensing data: sparse signals, Gaussian sensing matrices,
Gaussian noise with arbitrary covariance, and input-output ensembles.
"""
from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Tuple

import numpy as np

from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import DimensionMismatch, InvalidSparsity
from onebit_unfold.core.models import DatasetMeta, GenConfig, NoiseKind, NoiseModel
from onebit_unfold.numerics.linalg import (
    FloatArray,
    as_matrix,
    as_vector,
    cholesky_lower,
    frozen,
    l2_normalize,
)
from onebit_unfold.numerics.rng import SeededRng, Stream
from onebit_unfold.sensing.model import MeasurementSet, check_bits, quantize_one_bit

logger = get_logger(__name__)

Split = Literal["train", "test"]


@dataclass(frozen=True)
class Dataset:
    """B input-output pairs (rows of ``signals`` and ``bits``) plus generation metadata."""

    signals: FloatArray
    bits: FloatArray
    true_phi: FloatArray
    threshold: FloatArray
    config: GenConfig
    split: Split = "train"

    def __post_init__(self) -> None:
        signals = as_matrix(self.signals, "signals")
        bits = check_bits(self.bits, "bits")
        phi = as_matrix(self.true_phi, "true_phi")
        threshold = as_vector(self.threshold, "threshold")
        m, n = phi.shape
        if bits.ndim != 2 or signals.shape[0] != bits.shape[0] or signals.shape[0] < 1:
            raise DimensionMismatch("signals and bits must hold the same number (>= 1) of rows")
        if signals.shape[1] != n or bits.shape[1] != m or threshold.shape != (m,):
            raise DimensionMismatch(
                "dataset tables do not match the sensing matrix shape",
                details={"phi": [m, n], "signals": list(signals.shape), "bits": list(bits.shape)},
            )
        object.__setattr__(self, "signals", frozen(signals))
        object.__setattr__(self, "bits", frozen(bits))
        object.__setattr__(self, "true_phi", frozen(phi))
        object.__setattr__(self, "threshold", frozen(threshold))

    @property
    def size(self) -> int:
        return int(self.signals.shape[0])

    @property
    def n(self) -> int:
        return int(self.signals.shape[1])

    @property
    def m(self) -> int:
        return int(self.bits.shape[1])

    @property
    def noise(self) -> NoiseModel:
        return self.config.noise

    @property
    def seed(self) -> int:
        return self.config.seed

    def pairs(self) -> Iterator[Tuple[FloatArray, FloatArray]]:
        """Iterate over (x^i, y^i)."""
        for i in range(self.size):
            yield self.signals[i], self.bits[i]

    def measurements(self) -> MeasurementSet:
        """The blind view of the dataset: bits and thresholds, no sensing matrix."""
        return MeasurementSet(bits=self.bits, threshold=self.threshold)

    def meta(self) -> DatasetMeta:
        return DatasetMeta(
            split=self.split,
            config=self.config,
            threshold=[float(t) for t in self.threshold],
            samples=self.size,
        )


def gen_sparse_signal(
    n: int, k: int, rng: SeededRng, normalize: bool = False
) -> FloatArray:
    """K-sparse signal: uniform random support, i.i.d. N(0, 1) nonzeros."""
    if not 1 <= k <= n:
        raise InvalidSparsity(f"sparsity must satisfy 1 <= K <= n, got K={k}, n={n}")
    x = np.zeros(n)
    support = rng.choice_without_replacement(n, k)
    x[support] = rng.standard_normal(k)
    return l2_normalize(x) if normalize else x


def gen_sensing_matrix(m: int, n: int, rng: SeededRng) -> FloatArray:
    """m x n matrix with i.i.d. N(0, 1) entries."""
    if m < 1 or n < 1:
        raise DimensionMismatch(f"sensing matrix needs m, n >= 1, got {m}x{n}")
    return rng.standard_normal((m, n))


def toeplitz_covariance(m: int, variance: float, correlation: float) -> FloatArray:
    """Covariance variance * correlation^|i-j|."""
    idx = np.arange(m)
    return variance * np.power(correlation, np.abs(idx[:, None] - idx[None, :]))


def noise_factor(noise: NoiseModel, m: int) -> Optional[FloatArray]:
    """Lower Cholesky factor of a full-covariance model, None for other kinds."""
    if noise.kind != NoiseKind.FULL:
        return None
    if noise.covariance is not None:
        cov = as_matrix(noise.covariance, "covariance")
        if cov.shape != (m, m):
            raise DimensionMismatch(f"covariance shape {cov.shape} does not match m = {m}")
    else:
        cov = toeplitz_covariance(m, noise.variance, float(noise.correlation or 0.0))
    return cholesky_lower(cov)


def gen_noise(
    noise: NoiseModel, m: int, rng: SeededRng, factor: Optional[FloatArray] = None
) -> FloatArray:
    """One noise draw: zeros, sigma * N(0, I) or L N(0, I) with L L^T = C."""
    if noise.kind == NoiseKind.NONE:
        return np.zeros(m)
    if noise.kind == NoiseKind.IID:
        return rng.normal(m, std=float(np.sqrt(noise.variance)))
    if factor is None:
        factor = noise_factor(noise, m)
    assert factor is not None
    return factor @ rng.standard_normal(m)


def gen_dataset(cfg: GenConfig, split: Split = "train", samples: Optional[int] = None) -> Dataset:
    """
    Draw one true sensing matrix, then ``samples`` independent (x, noise) pairs.

    The matrix is always the first draw of the (seed, DATA) stream, so the
    train and test splits of one seed share it; test pairs come from a
    separate stream and never repeat training draws.
    """
    count = samples if samples is not None else cfg.samples
    rng = SeededRng(cfg.seed, Stream.DATA)
    phi = gen_sensing_matrix(cfg.m, cfg.n, rng)
    pair_rng = rng if split == "train" else SeededRng(cfg.seed, Stream.HOLDOUT)
    tau = np.asarray(cfg.threshold_vector(), dtype=np.float64)
    factor = noise_factor(cfg.noise, cfg.m)

    signals = np.zeros((count, cfg.n))
    bits = np.zeros((count, cfg.m))
    for i in range(count):
        x = gen_sparse_signal(cfg.n, cfg.k, pair_rng, normalize=cfg.normalize_signals)
        noise = gen_noise(cfg.noise, cfg.m, pair_rng, factor=factor)
        signals[i] = x
        bits[i] = quantize_one_bit(phi, x, tau, noise)

    logger.info(
        "dataset_generated",
        split=split,
        samples=count,
        n=cfg.n,
        m=cfg.m,
        k=cfg.k,
        noise=cfg.noise.kind.value,
        seed=cfg.seed,
    )
    return Dataset(
        signals=signals,
        bits=bits,
        true_phi=phi,
        threshold=tau,
        config=cfg.model_copy(update={"samples": count}),
        split=split,
    )


def regenerate_sensing_matrix(cfg: GenConfig) -> FloatArray:
    """The true sensing matrix of a recorded dataset, rebuilt from its seed."""
    return gen_sensing_matrix(cfg.m, cfg.n, SeededRng(cfg.seed, Stream.DATA))
