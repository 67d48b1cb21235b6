"""
One-bit acquisition model and the classical BIHT recovery path.

All operations accept either a single vector or a row-stacked batch, with
identical per-row semantics. sign(0) = +1 everywhere.
"""
from dataclasses import dataclass
from typing import Any, Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import DimensionMismatch, ValidationError
from onebit_unfold.numerics.linalg import (
    BoolArray,
    FloatArray,
    as_matrix,
    as_rows,
    as_vector,
    frozen,
    l2_norms,
    top_k_mask,
)

logger = get_logger(__name__)

Activation = Callable[[FloatArray], FloatArray]


def sign_pm1(u: FloatArray) -> FloatArray:
    """Elementwise sign onto {+1, -1} with sign(0) = +1."""
    return np.where(u >= 0.0, 1.0, -1.0)


def check_bits(bits: Any, name: str = "measurements") -> FloatArray:
    """Validate one-bit measurements: every entry exactly +1 or -1."""
    arr = as_rows(bits, name)
    if not np.all(np.abs(arr) == 1.0):
        raise ValidationError(f"{name} must contain only +1/-1 entries")
    return arr


@dataclass(frozen=True)
class MeasurementSet:
    """What a blind decoder observes: one-bit measurements and the known thresholds."""

    bits: FloatArray
    threshold: FloatArray

    def __post_init__(self) -> None:
        bits = check_bits(self.bits)
        tau = as_vector(self.threshold, "threshold")
        if bits.shape[-1] != tau.shape[0]:
            raise DimensionMismatch(
                f"measurements have length {bits.shape[-1]}, threshold has {tau.shape[0]}"
            )
        object.__setattr__(self, "bits", frozen(bits))
        object.__setattr__(self, "threshold", frozen(tau))

    @property
    def m(self) -> int:
        return int(self.threshold.shape[0])


def _check_operands(
    phi: Any, x: Any, tau: Any
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    phi_arr = as_matrix(phi, "phi")
    x_arr = as_rows(x, "x")
    tau_arr = as_vector(tau, "threshold")
    m, n = phi_arr.shape
    if x_arr.shape[-1] != n:
        raise DimensionMismatch(
            f"signal length {x_arr.shape[-1]} does not match phi columns {n}",
            details={"phi": [m, n], "x": list(x_arr.shape)},
        )
    if tau_arr.shape[0] != m:
        raise DimensionMismatch(
            f"threshold length {tau_arr.shape[0]} does not match phi rows {m}",
            details={"phi": [m, n], "threshold": list(tau_arr.shape)},
        )
    return phi_arr, x_arr, tau_arr


def quantize_one_bit(
    phi: Any, x: Any, tau: Any, noise: Optional[Any] = None
) -> FloatArray:
    """y = sign(phi x + noise - tau); omitted noise is treated as zero."""
    phi_arr, x_arr, tau_arr = _check_operands(phi, x, tau)
    pre = x_arr @ phi_arr.T
    if noise is not None:
        noise_arr = as_rows(noise, "noise")
        if noise_arr.shape != pre.shape:
            raise DimensionMismatch(
                f"noise shape {noise_arr.shape} does not match measurements {pre.shape}"
            )
        pre = pre + noise_arr
    return sign_pm1(pre - tau_arr)


def consistency_objective(
    phi: Any, x: Any, tau: Any, y: Any
) -> Union[float, FloatArray]:
    """
    sum_j max(-y_j (phi x - tau)_j, 0).

    Returns a float for a single signal and one value per row for a batch.
    """
    phi_arr, x_arr, tau_arr = _check_operands(phi, x, tau)
    y_arr = check_bits(y)
    u = x_arr @ phi_arr.T - tau_arr
    if y_arr.shape != u.shape:
        raise DimensionMismatch(
            f"measurements shape {y_arr.shape} does not match {u.shape}"
        )
    value = np.sum(np.maximum(-y_arr * u, 0.0), axis=-1)
    return float(value) if value.ndim == 0 else value


def hard_threshold(v: Any, k: int) -> FloatArray:
    """Keep the k largest-magnitude entries (ties to the lower index), zero the rest."""
    arr = as_rows(v, "v")
    return np.where(top_k_mask(arr, k), arr, 0.0)


class BihtStep(NamedTuple):
    """Intermediates of one thresholded gradient step, in forward order."""

    u: FloatArray
    r: FloatArray
    p: FloatArray
    v: FloatArray
    mask: BoolArray
    z: FloatArray
    z_norm: FloatArray
    out: FloatArray


def biht_update(
    phi: FloatArray,
    x: FloatArray,
    y: FloatArray,
    tau: FloatArray,
    alpha: float,
    k: int,
    normalize: bool,
    activation: Activation = sign_pm1,
) -> BihtStep:
    """
    One step H_k(x + alpha phi^T (y - sign(phi x - tau))), optionally l2-normalized.

    Both the BIHT baseline and the unfolded network layers run through this
    function, so their arithmetic is identical.
    """
    u = x @ phi.T - tau
    r = y - activation(u)
    p = r @ phi
    v = x + alpha * p
    mask = top_k_mask(v, k)
    z = np.where(mask, v, 0.0)
    z_norm = l2_norms(z)
    if normalize:
        out = np.where(z_norm > 0.0, z / np.where(z_norm > 0.0, z_norm, 1.0), z)
    else:
        out = z
    return BihtStep(u=u, r=r, p=p, v=v, mask=mask, z=z, z_norm=z_norm, out=out)


@dataclass(frozen=True)
class BihtConfig:
    """Settings of the classical BIHT baseline."""

    sparsity: int
    step_size: float = 1.0
    iterations: int = 10
    initial_point: Optional[FloatArray] = None
    normalize_each_iteration: bool = True

    def __post_init__(self) -> None:
        if self.step_size <= 0:
            raise ValidationError(f"step_size must be positive, got {self.step_size}")
        if self.iterations < 0:
            raise ValidationError(f"iterations must be >= 0, got {self.iterations}")
        if self.sparsity < 0:
            raise ValidationError(f"sparsity must be >= 0, got {self.sparsity}")
        if self.initial_point is not None:
            object.__setattr__(
                self, "initial_point", frozen(as_rows(self.initial_point, "initial_point"))
            )


def biht_iterate(
    phi: Any, y: Any, tau: Any, cfg: BihtConfig
) -> Tuple[FloatArray, List[FloatArray]]:
    """
    Run cfg.iterations BIHT steps from cfg.initial_point (zeros by default).

    Returns the final estimate and the trajectory, which starts with x0 and
    has iterations + 1 entries.
    """
    y_arr = check_bits(y)
    phi_arr = as_matrix(phi, "phi")
    n = phi_arr.shape[1]
    if cfg.initial_point is None:
        x0 = np.zeros(y_arr.shape[:-1] + (n,))
    elif cfg.initial_point.shape[-1] != n:
        raise DimensionMismatch(
            f"initial point length {cfg.initial_point.shape[-1]} does not match phi columns {n}"
        )
    else:
        x0 = np.broadcast_to(cfg.initial_point, y_arr.shape[:-1] + (n,)).copy()
    phi_arr, x0, tau_arr = _check_operands(phi_arr, x0, tau)
    if y_arr.shape[-1] != phi_arr.shape[0]:
        raise DimensionMismatch(
            f"measurements length {y_arr.shape[-1]} does not match phi rows {phi_arr.shape[0]}"
        )

    trajectory = [x0]
    x = x0
    for _ in range(cfg.iterations):
        x = biht_update(
            phi_arr,
            x,
            y_arr,
            tau_arr,
            cfg.step_size,
            cfg.sparsity,
            cfg.normalize_each_iteration,
        ).out
        trajectory.append(x)

    logger.debug(
        "biht_complete",
        iterations=cfg.iterations,
        step_size=cfg.step_size,
        batch=int(x0.shape[0]) if x0.ndim == 2 else 1,
    )
    return x, trajectory
