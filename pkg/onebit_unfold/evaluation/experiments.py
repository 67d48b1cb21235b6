"""
Experiments comparing the blind unfolded network against BIHT with the true matrix.

A realization redraws the true sensing matrix, the training and held-out test
pairs and the noise (seed = master seed + realization index), retrains both
stages and evaluates on the held-out pairs. Realizations run in parallel;
results are collected in realization order, so the outcome does not depend on
the worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from onebit_unfold.config.logging import get_logger
from onebit_unfold.config.settings import RunConfig
from onebit_unfold.core.exceptions import InvalidSparsity
from onebit_unfold.core.models import ExperimentConfig, ExperimentResult, RawRecord
from onebit_unfold.data.generators import Dataset, gen_dataset
from onebit_unfold.evaluation.metrics import batch_nmse
from onebit_unfold.network.unfolded import UnfoldedParams, recover_layers
from onebit_unfold.numerics.linalg import FloatArray
from onebit_unfold.sensing.model import BihtConfig, biht_iterate, consistency_objective
from onebit_unfold.training.trainer import train_alternating

logger = get_logger(__name__)

METHOD_UNFOLDED = "unfolded"
METHOD_BIHT = "biht"
METHODS = [METHOD_UNFOLDED, METHOD_BIHT]

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class LayerwiseEvaluation:
    """Mean test NMSE after every layer / iteration, plus final consistency."""

    unfolded_nmse: FloatArray
    biht_nmse: FloatArray
    unfolded_consistency: float
    biht_consistency: float

    @property
    def depth(self) -> int:
        return int(self.unfolded_nmse.shape[0])


def evaluate_model(
    params: UnfoldedParams,
    test: Dataset,
    experiment: ExperimentConfig,
    depth: Optional[int] = None,
) -> LayerwiseEvaluation:
    """
    Per-layer NMSE of the trained network and per-iteration NMSE of BIHT.

    The network sees only the measurements of ``test``; BIHT gets the true
    matrix, the same zero start and the same iteration budget.
    """
    depth = params.depth if depth is None else depth
    layers = recover_layers(params, test.measurements(), depth=depth)
    unfolded = np.array([float(np.mean(batch_nmse(out, test.signals))) for out in layers])

    biht_cfg = BihtConfig(
        sparsity=params.sparsity,
        step_size=experiment.biht_step_for(test.m),
        iterations=depth,
        normalize_each_iteration=experiment.biht_normalize,
    )
    _, trajectory = biht_iterate(test.true_phi, test.bits, test.threshold, biht_cfg)
    biht = np.array([float(np.mean(batch_nmse(x, test.signals))) for x in trajectory[1:]])

    return LayerwiseEvaluation(
        unfolded_nmse=unfolded,
        biht_nmse=biht,
        unfolded_consistency=_mean_consistency(test, layers[-1]),
        biht_consistency=_mean_consistency(test, trajectory[-1]),
    )


def _mean_consistency(test: Dataset, estimates: FloatArray) -> float:
    values = consistency_objective(test.true_phi, estimates, test.threshold, test.bits)
    return float(np.mean(values))


def run_realization(
    cfg: RunConfig, realization: int, k: Optional[int] = None, parallel: bool = False
) -> LayerwiseEvaluation:
    """Generate, train both stages and evaluate one realization."""
    gen = cfg.gen_for(realization, k=k)
    train = gen_dataset(gen, split="train")
    test = gen_dataset(gen, split="test", samples=cfg.experiment.test_samples)

    stage1 = cfg.stage_for(1, realization, sparsity=k)
    stage2 = cfg.stage_for(2, realization)
    if parallel:
        # realizations already occupy the workers
        stage1 = stage1.model_copy(update={"threads": 1})
        stage2 = stage2.model_copy(update={"threads": 1})

    model = train_alternating(train, stage1, stage2, rounds=cfg.experiment.training_rounds)
    evaluation = evaluate_model(model.params, test, cfg.experiment)
    logger.info(
        "realization_complete",
        realization=realization,
        k=gen.k,
        unfolded_final=float(evaluation.unfolded_nmse[-1]),
        biht_final=float(evaluation.biht_nmse[-1]),
    )
    return evaluation


def _map_ordered(fn: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _finish(
    name: str,
    axis_name: str,
    axis: List[int],
    realizations: int,
    raw: List[RawRecord],
    config: Dict[str, Any],
) -> ExperimentResult:
    result = ExperimentResult(
        name=name,
        axis_name=axis_name,
        axis=axis,
        methods=list(METHODS),
        mean_nmse={method: [0.0] * len(axis) for method in METHODS},
        realizations=realizations,
        raw=raw,
        config=config,
    )
    return result.model_copy(update={"mean_nmse": result.recompute_means()})


def _snapshot(cfg: RunConfig) -> Dict[str, Any]:
    return cfg.model_dump(mode="json", by_alias=True)


def _layer_records(evaluation: LayerwiseEvaluation, realization: int) -> List[RawRecord]:
    records: List[RawRecord] = []
    for i in range(evaluation.depth):
        records.append(
            RawRecord(
                axis=i + 1,
                method=METHOD_UNFOLDED,
                realization=realization,
                nmse=float(evaluation.unfolded_nmse[i]),
            )
        )
        records.append(
            RawRecord(
                axis=i + 1,
                method=METHOD_BIHT,
                realization=realization,
                nmse=float(evaluation.biht_nmse[i]),
            )
        )
    return records


def layerwise_experiment(cfg: RunConfig, realizations: Optional[int] = None) -> ExperimentResult:
    """Mean NMSE after each layer (network) and each iteration (BIHT)."""
    count = realizations or cfg.experiment.realizations
    workers = cfg.resolved_threads()
    logger.info("experiment_started", name="layerwise", realizations=count, workers=workers)

    evaluations = _map_ordered(
        lambda r: run_realization(cfg, r, parallel=workers > 1), list(range(count)), workers
    )

    depth = evaluations[0].depth
    raw: List[RawRecord] = []
    for r, evaluation in enumerate(evaluations):
        raw.extend(_layer_records(evaluation, r))
    return _finish("layerwise", "layer", list(range(1, depth + 1)), count, raw, _snapshot(cfg))


def single_model_result(
    evaluation: LayerwiseEvaluation, config: Dict[str, Any], name: str = "eval"
) -> ExperimentResult:
    """Wrap the evaluation of one trained model as a one-realization result."""
    axis = list(range(1, evaluation.depth + 1))
    return _finish(name, "layer", axis, 1, _layer_records(evaluation, 0), config)


def sparsity_sweep(
    cfg: RunConfig,
    k_values: Optional[Sequence[int]] = None,
    realizations: Optional[int] = None,
) -> ExperimentResult:
    """Final-layer mean NMSE of both methods for each sparsity level K."""
    ks = list(k_values) if k_values is not None else list(cfg.experiment.k_values)
    too_large = [k for k in ks if not 1 <= k <= cfg.gen.n]
    if too_large:
        raise InvalidSparsity(
            f"sparsity levels {too_large} are outside 1..n = {cfg.gen.n}",
            details={"k_values": too_large},
        )
    count = realizations or cfg.experiment.realizations
    workers = cfg.resolved_threads()
    logger.info(
        "experiment_started", name="sparsity", k_values=ks, realizations=count, workers=workers
    )

    jobs: List[Tuple[int, int]] = [(k, r) for k in ks for r in range(count)]
    evaluations = _map_ordered(
        lambda job: run_realization(cfg, job[1], k=job[0], parallel=workers > 1), jobs, workers
    )

    raw: List[RawRecord] = []
    for (k, r), evaluation in zip(jobs, evaluations):
        raw.append(
            RawRecord(
                axis=k,
                method=METHOD_UNFOLDED,
                realization=r,
                nmse=float(evaluation.unfolded_nmse[-1]),
            )
        )
        raw.append(
            RawRecord(
                axis=k, method=METHOD_BIHT, realization=r, nmse=float(evaluation.biht_nmse[-1])
            )
        )
    return _finish("sparsity", "sparsity", ks, count, raw, _snapshot(cfg))
