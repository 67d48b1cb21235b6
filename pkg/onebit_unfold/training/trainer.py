"""
Two-stage training of the unfolded network.

Stage 1 learns the surrogate sensing matrix with one shared step size over L
layers, using the final-layer squared error. Stage 2 freezes that matrix and
learns per-layer step sizes over L' <= L layers, using the squared error
accumulated over every layer plus a ReLU penalty on negative step sizes.
Training only ever reads the signals, bits and thresholds of a dataset.
"""
import contextlib
from concurrent.futures import Executor, ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import (
    ConfigurationError,
    DivergenceDetected,
    ShapeMismatch,
)
from onebit_unfold.core.models import TrainingConfig
from onebit_unfold.data.generators import Dataset
from onebit_unfold.network.unfolded import (
    NetworkGradients,
    UnfoldedParams,
    network_backward,
    network_forward,
)
from onebit_unfold.numerics.linalg import FloatArray, l2_normalize
from onebit_unfold.numerics.rng import SeededRng, Stream
from onebit_unfold.training.optim import AdamState, adam_step

logger = get_logger(__name__)


@dataclass(frozen=True)
class TrainedModel:
    """Learned parameters with their training history and provenance."""

    params: UnfoldedParams
    history: List[float]
    config: TrainingConfig
    dataset_meta: Dict[str, Any]
    full_depth: int

    @property
    def stage(self) -> int:
        return self.config.stage


# ==========================================
# Losses
# ==========================================


def _as_batch(values: Any) -> FloatArray:
    return np.atleast_2d(np.asarray(values, dtype=np.float64))


def loss_stage1(final_outputs: Any, targets: Any) -> float:
    """Sum over the batch of ||x_hat^i - x^i||^2."""
    out = _as_batch(final_outputs)
    tgt = _as_batch(targets)
    if out.shape != tgt.shape:
        raise ShapeMismatch(f"outputs {out.shape} and targets {tgt.shape} differ")
    diff = out - tgt
    return float(np.sum(diff * diff))


def step_size_penalty(step_sizes: Any, lam: float) -> float:
    """lam * sum_i max(-alpha_i, 0)."""
    alphas = np.asarray(step_sizes, dtype=np.float64)
    return float(lam * np.sum(np.maximum(-alphas, 0.0)))


def loss_stage2(
    per_layer_outputs: Sequence[Any], targets: Any, step_sizes: Any, lam: float
) -> float:
    """
    Squared error accumulated over every layer plus the step-size penalty.

    Args:
        per_layer_outputs: one batch of estimates per layer, L' entries
        targets: true signals of the batch
        step_sizes: the L' layer step sizes
        lam: penalty weight
    """
    alphas = np.asarray(step_sizes, dtype=np.float64)
    if len(per_layer_outputs) != alphas.shape[0]:
        raise ShapeMismatch(
            f"{len(per_layer_outputs)} layer outputs but {alphas.shape[0]} step sizes"
        )
    data = sum(loss_stage1(out, targets) for out in per_layer_outputs)
    return float(data) + step_size_penalty(alphas, lam)


# ==========================================
# Batched objective
# ==========================================


def _chunk_objective(
    params: UnfoldedParams,
    signals: FloatArray,
    bits: FloatArray,
    depth: int,
    all_layers: bool,
) -> Tuple[float, NetworkGradients]:
    x0 = np.zeros_like(signals)
    outputs, caches = network_forward(params, x0, bits, depth=depth)
    if all_layers:
        loss = loss_stage2(outputs, signals, params.step_sizes[:depth], lam=0.0)
        upstreams: List[Optional[FloatArray]] = [2.0 * (out - signals) for out in outputs]
    else:
        loss = loss_stage1(outputs[-1], signals)
        upstreams = [None] * (depth - 1) + [2.0 * (outputs[-1] - signals)]
    return loss, network_backward(caches, params, depth, upstreams)


def batch_objective(
    params: UnfoldedParams,
    signals: FloatArray,
    bits: FloatArray,
    depth: int,
    all_layers: bool,
    pool: Optional[Executor] = None,
    chunks: int = 1,
    deterministic: bool = True,
) -> Tuple[float, NetworkGradients]:
    """
    Data loss and gradients of one mini-batch, optionally split over a thread pool.

    Chunk results are reduced in chunk order when ``deterministic``; otherwise in
    completion order, which may differ by floating-point reassociation.
    """
    parts = min(chunks, signals.shape[0])
    if pool is None or parts <= 1:
        return _chunk_objective(params, signals, bits, depth, all_layers)

    index_chunks = np.array_split(np.arange(signals.shape[0]), parts)
    futures = [
        pool.submit(_chunk_objective, params, signals[idx], bits[idx], depth, all_layers)
        for idx in index_chunks
    ]
    ordered = futures if deterministic else list(as_completed(futures))
    loss = 0.0
    grads = NetworkGradients.zeros(params.m, params.n, depth)
    for future in ordered:
        part_loss, part_grads = future.result()
        loss += part_loss
        grads = grads + part_grads
    return loss, grads


@contextlib.contextmanager
def _worker_pool(threads: int) -> Iterator[Optional[Executor]]:
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield pool


def _require_finite(value: Any, what: str, stage: int, epoch: int) -> None:
    if not np.all(np.isfinite(value)):
        logger.error("training_diverged", stage=stage, epoch=epoch, quantity=what)
        raise DivergenceDetected(
            f"Stage {stage} {what} became non-finite at epoch {epoch}",
            details={"stage": stage, "epoch": epoch},
        )


def _optimize(
    dataset: Dataset, params: UnfoldedParams, cfg: TrainingConfig
) -> Tuple[UnfoldedParams, List[float]]:
    """
    Mini-batch Adam on Phi (stage 1) or on the step sizes (stage 2).

    Each history entry is the epoch's summed data loss, plus the step-size
    penalty at the end of the epoch in stage 2, divided by the dataset size.
    """
    stage = cfg.stage
    depth = params.depth
    block = params.phi if stage == 1 else params.step_sizes
    state = AdamState.fresh(
        block.shape, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps
    )
    shuffle = SeededRng(cfg.seed, Stream.SHUFFLE)
    signals, bits = dataset.signals, dataset.bits
    history: List[float] = []

    with _worker_pool(cfg.threads) as pool:
        for epoch in range(1, cfg.epochs + 1):
            order = shuffle.permutation(dataset.size)
            total = 0.0
            for start in range(0, dataset.size, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                loss, grads = batch_objective(
                    params,
                    signals[idx],
                    bits[idx],
                    depth,
                    all_layers=stage == 2,
                    pool=pool,
                    chunks=cfg.threads,
                    deterministic=cfg.deterministic_reduction,
                )
                if stage == 1:
                    _require_finite(loss, "loss", stage, epoch)
                    _require_finite(grads.grad_phi, "gradient", stage, epoch)
                    new_phi, state = adam_step(state, params.phi, grads.grad_phi)
                    _require_finite(new_phi, "parameters", stage, epoch)
                    params = params.with_updates(phi=new_phi)
                else:
                    # subgradient of lam * ReLU(-alpha), zero at alpha = 0
                    grad_alpha = grads.grad_alpha - cfg.lam * (params.step_sizes < 0.0)
                    _require_finite(loss, "loss", stage, epoch)
                    _require_finite(grad_alpha, "gradient", stage, epoch)
                    new_alpha, state = adam_step(state, params.step_sizes, grad_alpha)
                    _require_finite(new_alpha, "parameters", stage, epoch)
                    params = params.with_updates(step_sizes=new_alpha)
                total += loss

            if stage == 2:
                total += step_size_penalty(params.step_sizes, cfg.lam)
            mean_loss = total / dataset.size
            _require_finite(mean_loss, "loss", stage, epoch)
            history.append(mean_loss)
            logger.info("epoch_complete", stage=stage, epoch=epoch, mean_loss=mean_loss)

    return params, history


# ==========================================
# Stages
# ==========================================


def correlation_phi(dataset: Dataset) -> FloatArray:
    """
    Sign-correlation estimate of the sensing matrix from the training pairs.

    Row j is sum_i y_j^i x^i, rescaled to norm sqrt(n) so it matches the
    scale of an N(0, 1) row. Only signals and bits are read.
    """
    estimate = dataset.bits.T @ dataset.signals
    return np.sqrt(dataset.n) * l2_normalize(estimate)


def train_stage1(
    dataset: Dataset,
    cfg: TrainingConfig,
    initial_phi: Optional[FloatArray] = None,
) -> TrainedModel:
    """
    Learn the surrogate sensing matrix with a shared, fixed step size.

    Unless ``initial_phi`` is given, the matrix starts from i.i.d. N(0, 1)
    draws of the (seed, PARAM_INIT) stream, or from ``correlation_phi`` when
    ``cfg.phi_init`` is "correlation".
    """
    if cfg.stage != 1:
        raise ConfigurationError(f"train_stage1 needs a stage-1 config, got stage {cfg.stage}")
    m, n = dataset.m, dataset.n
    start = "given" if initial_phi is not None else cfg.phi_init
    if initial_phi is not None and np.shape(initial_phi) != (m, n):
        raise ShapeMismatch(f"initial_phi must be {m}x{n}, got {np.shape(initial_phi)}")
    if start == "correlation":
        initial_phi = correlation_phi(dataset)
    elif start == "gaussian":
        initial_phi = SeededRng(cfg.seed, Stream.PARAM_INIT).standard_normal((m, n))
    assert initial_phi is not None

    params = UnfoldedParams(
        phi=initial_phi,
        step_sizes=np.full(cfg.depth, cfg.resolved_alpha(m)),
        sparsity=cfg.network_sparsity(dataset.config.k),
        threshold=dataset.threshold,
        normalize_per_layer=cfg.normalize_per_layer,
        ste_clip=cfg.clip,
    )
    logger.info(
        "stage_started",
        stage=1,
        epochs=cfg.epochs,
        depth=cfg.depth,
        samples=dataset.size,
        lr=cfg.lr,
        phi_init=start,
    )
    params, history = _optimize(dataset, params, cfg)
    logger.info("stage_complete", stage=1, final_loss=history[-1])
    return TrainedModel(
        params=params,
        history=history,
        config=cfg,
        dataset_meta=dataset.meta().model_dump(mode="json"),
        full_depth=cfg.depth,
    )


def train_stage2(
    dataset: Dataset, stage1_model: TrainedModel, cfg: TrainingConfig
) -> TrainedModel:
    """
    Learn per-layer step sizes over the first L' layers with Phi* frozen.

    Step sizes start from ``cfg.initial_step_sizes`` or from the stage-1
    values of the first L' layers.
    """
    if cfg.stage != 2:
        raise ConfigurationError(f"train_stage2 needs a stage-2 config, got stage {cfg.stage}")
    full_depth = stage1_model.full_depth
    depth_prime = cfg.effective_depth_prime(full_depth)
    if depth_prime > full_depth:
        raise ConfigurationError(
            f"depth_prime ({depth_prime}) exceeds the stage-1 depth ({full_depth})"
        )
    if not np.array_equal(dataset.threshold, stage1_model.params.threshold):
        raise ConfigurationError("dataset thresholds differ from the stage-1 model's")

    if cfg.initial_step_sizes is not None:
        if len(cfg.initial_step_sizes) != depth_prime:
            raise ConfigurationError(
                f"initial_step_sizes has {len(cfg.initial_step_sizes)} entries, "
                f"expected {depth_prime}"
            )
        initial = np.asarray(cfg.initial_step_sizes, dtype=np.float64)
    else:
        initial = np.array(stage1_model.params.step_sizes[:depth_prime])

    params = stage1_model.params.with_updates(step_sizes=initial)
    logger.info(
        "stage_started",
        stage=2,
        epochs=cfg.epochs,
        depth_prime=depth_prime,
        samples=dataset.size,
        lr=cfg.lr,
        lam=cfg.lam,
    )
    params, history = _optimize(dataset, params, cfg)
    logger.info(
        "stage_complete",
        stage=2,
        final_loss=history[-1],
        step_sizes=[float(a) for a in params.step_sizes],
    )
    return TrainedModel(
        params=params,
        history=history,
        config=cfg,
        dataset_meta=dataset.meta().model_dump(mode="json"),
        full_depth=full_depth,
    )


def train_alternating(
    dataset: Dataset,
    stage1_cfg: TrainingConfig,
    stage2_cfg: TrainingConfig,
    rounds: int = 1,
) -> TrainedModel:
    """
    Repeat stage 1 then stage 2 for ``rounds`` rounds.

    Each round restarts stage 1 from the latest Phi* with the shared step size;
    the returned model is the last stage-2 result.
    """
    if rounds < 1:
        raise ConfigurationError(f"rounds must be >= 1, got {rounds}")
    phi: Optional[FloatArray] = None
    model: Optional[TrainedModel] = None
    for round_index in range(1, rounds + 1):
        stage1_model = train_stage1(dataset, stage1_cfg, initial_phi=phi)
        model = train_stage2(dataset, stage1_model, stage2_cfg)
        phi = model.params.phi
        logger.info("round_complete", round=round_index, rounds=rounds, loss=model.history[-1])
    assert model is not None
    return model
