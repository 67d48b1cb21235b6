"""
The L-layer unfolded BIHT network.

Layer i computes H_k(x + alpha_i Phi^T (y - sign(Phi x - tau))), optionally
followed by l2 normalization. Phi is shared across layers. Gradients are
derived by hand; sign is back-propagated with a clipped straight-through
estimator 1{|u| <= c}.

Every function accepts a single sample or a row-stacked batch. For a batch the
Phi and alpha gradients are summed over rows.
"""
import dataclasses
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from onebit_unfold.core.exceptions import DimensionMismatch, StaleCache, ValidationError
from onebit_unfold.numerics.linalg import (
    BoolArray,
    FloatArray,
    as_matrix,
    as_rows,
    as_vector,
    frozen,
)
from onebit_unfold.sensing.model import (
    Activation,
    MeasurementSet,
    biht_update,
    check_bits,
    sign_pm1,
)


@dataclass(frozen=True)
class UnfoldedParams:
    """Trainable surrogate matrix and step sizes plus the fixed layer settings."""

    phi: FloatArray
    step_sizes: FloatArray
    sparsity: int
    threshold: FloatArray
    normalize_per_layer: bool = True
    ste_clip: float = 1.0

    def __post_init__(self) -> None:
        phi = as_matrix(self.phi, "phi")
        steps = as_vector(self.step_sizes, "step_sizes")
        tau = as_vector(self.threshold, "threshold")
        if steps.shape[0] < 1:
            raise ValidationError("at least one layer step size is required")
        if tau.shape[0] != phi.shape[0]:
            raise DimensionMismatch(
                f"threshold length {tau.shape[0]} does not match phi rows {phi.shape[0]}"
            )
        if self.sparsity < 0:
            raise ValidationError(f"sparsity must be >= 0, got {self.sparsity}")
        if not self.ste_clip > 0:
            raise ValidationError(f"ste_clip must be positive, got {self.ste_clip}")
        object.__setattr__(self, "phi", frozen(phi))
        object.__setattr__(self, "step_sizes", frozen(steps))
        object.__setattr__(self, "threshold", frozen(tau))

    @property
    def m(self) -> int:
        return int(self.phi.shape[0])

    @property
    def n(self) -> int:
        return int(self.phi.shape[1])

    @property
    def depth(self) -> int:
        return int(self.step_sizes.shape[0])

    def with_updates(self, **changes: Any) -> "UnfoldedParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LayerCache:
    """Forward intermediates of one layer, kept for the backward pass."""

    layer_index: int
    x: FloatArray
    u: FloatArray
    r: FloatArray
    p: FloatArray
    v: FloatArray
    mask: BoolArray
    z: FloatArray
    z_norm: FloatArray


@dataclass(frozen=True)
class NetworkGradients:
    """Loss gradients with respect to Phi and every layer's step size."""

    grad_phi: FloatArray
    grad_alpha: FloatArray

    def __add__(self, other: "NetworkGradients") -> "NetworkGradients":
        if self.grad_alpha.shape != other.grad_alpha.shape:
            raise ValidationError("cannot add gradients of networks with different depths")
        return NetworkGradients(
            grad_phi=self.grad_phi + other.grad_phi,
            grad_alpha=self.grad_alpha + other.grad_alpha,
        )

    @classmethod
    def zeros(cls, m: int, n: int, depth: int) -> "NetworkGradients":
        return cls(grad_phi=np.zeros((m, n)), grad_alpha=np.zeros(depth))


def clamp_activation(clip: float) -> Activation:
    """Surrogate forward for sign: clamp(u, -c, c), whose derivative is the STE rule."""

    def activation(u: FloatArray) -> FloatArray:
        return np.clip(u, -clip, clip)

    return activation


def ste_backward(u: Any, upstream: Any, clip: float) -> FloatArray:
    """Straight-through gradient of sign: upstream where |u| <= clip, zero elsewhere."""
    u_arr = np.asarray(u, dtype=np.float64)
    g = np.asarray(upstream, dtype=np.float64)
    if u_arr.shape != g.shape:
        raise DimensionMismatch(f"u shape {u_arr.shape} does not match upstream {g.shape}")
    return np.where(np.abs(u_arr) <= clip, g, 0.0)


def _check_layer_inputs(
    params: UnfoldedParams, x: Any, y: Any
) -> Tuple[FloatArray, FloatArray]:
    x_arr = as_rows(x, "x")
    y_arr = check_bits(y)
    if x_arr.shape[-1] != params.n:
        raise DimensionMismatch(
            f"layer input length {x_arr.shape[-1]} does not match phi columns {params.n}"
        )
    if y_arr.shape[-1] != params.m:
        raise DimensionMismatch(
            f"measurements length {y_arr.shape[-1]} does not match phi rows {params.m}"
        )
    if x_arr.shape[:-1] != y_arr.shape[:-1]:
        raise DimensionMismatch(
            f"batch sizes differ: x {x_arr.shape}, measurements {y_arr.shape}"
        )
    return x_arr, y_arr


def layer_forward(
    params: UnfoldedParams,
    layer_index: int,
    x: Any,
    y: Any,
    surrogate: bool = False,
) -> Tuple[FloatArray, LayerCache]:
    """
    Apply layer ``layer_index`` (1-based) to x given measurements y.

    With ``surrogate`` the forward sign is replaced by clamp(u, -c, c); this
    exists for gradient checking only.
    """
    if not 1 <= layer_index <= params.depth:
        raise ValidationError(f"layer_index must be in 1..{params.depth}, got {layer_index}")
    x_arr, y_arr = _check_layer_inputs(params, x, y)
    activation = clamp_activation(params.ste_clip) if surrogate else sign_pm1
    step = biht_update(
        params.phi,
        x_arr,
        y_arr,
        params.threshold,
        float(params.step_sizes[layer_index - 1]),
        params.sparsity,
        params.normalize_per_layer,
        activation,
    )
    cache = LayerCache(
        layer_index=layer_index,
        x=x_arr,
        u=step.u,
        r=step.r,
        p=step.p,
        v=step.v,
        mask=step.mask,
        z=step.z,
        z_norm=step.z_norm,
    )
    return step.out, cache


def network_forward(
    params: UnfoldedParams,
    x0: Any,
    y: Any,
    depth: Optional[int] = None,
    surrogate: bool = False,
) -> Tuple[List[FloatArray], List[LayerCache]]:
    """Run the first ``depth`` layers; returns every layer's output and cache."""
    depth = params.depth if depth is None else depth
    if not 1 <= depth <= params.depth:
        raise ValidationError(f"depth must be in 1..{params.depth}, got {depth}")
    outputs: List[FloatArray] = []
    caches: List[LayerCache] = []
    x = x0
    for i in range(1, depth + 1):
        x, cache = layer_forward(params, i, x, y, surrogate=surrogate)
        outputs.append(x)
        caches.append(cache)
    return outputs, caches


def layer_backward(
    cache: LayerCache,
    params: UnfoldedParams,
    layer_index: int,
    upstream: Any,
) -> Tuple[FloatArray, FloatArray, float]:
    """
    Back-propagate ``upstream`` (dLoss/d layer output) through one layer.

    Returns (dLoss/dx, dLoss/dPhi contribution, dLoss/dalpha_i contribution).
    """
    g_out = np.asarray(upstream, dtype=np.float64)
    if cache.layer_index != layer_index:
        raise StaleCache(
            f"cache belongs to layer {cache.layer_index}, not layer {layer_index}"
        )
    if g_out.shape != cache.x.shape or cache.u.shape[-1] != params.m or (
        cache.x.shape[-1] != params.n
    ):
        raise StaleCache(
            "cache dimensions do not match parameters or upstream gradient",
            details={
                "upstream": list(g_out.shape),
                "cache_x": list(cache.x.shape),
                "phi": [params.m, params.n],
            },
        )

    alpha = float(params.step_sizes[layer_index - 1])

    # normalization Jacobian (I - w w^T) / ||z||, identity when skipped
    if params.normalize_per_layer:
        active = cache.z_norm > 0.0
        norm = np.where(active, cache.z_norm, 1.0)
        w = cache.z / norm
        projected = (g_out - w * np.sum(w * g_out, axis=-1, keepdims=True)) / norm
        g_z = np.where(active, projected, g_out)
    else:
        g_z = g_out

    g_v = np.where(cache.mask, g_z, 0.0)
    grad_alpha = float(np.sum(cache.p * g_v))

    # g_u = D Phi g_v, with D the STE derivative
    g_u = ste_backward(cache.u, g_v @ params.phi.T, params.ste_clip)

    g_v2 = np.atleast_2d(g_v)
    grad_phi = alpha * (
        np.atleast_2d(cache.r).T @ g_v2 - np.atleast_2d(g_u).T @ np.atleast_2d(cache.x)
    )
    grad_x = g_v - alpha * (g_u @ params.phi)
    return grad_x, grad_phi, grad_alpha


def network_backward(
    caches: Sequence[LayerCache],
    params: UnfoldedParams,
    depth: int,
    per_layer_upstreams: Sequence[Optional[Any]],
) -> NetworkGradients:
    """
    Accumulate gradients through ``depth`` layers in reverse order.

    ``per_layer_upstreams[i]`` is dLoss/d output of layer i + 1; ``None`` stands
    for a zero gradient.
    """
    if len(caches) != depth or len(per_layer_upstreams) != depth:
        raise StaleCache(
            f"expected {depth} caches and upstreams, got {len(caches)} and "
            f"{len(per_layer_upstreams)}"
        )
    grad_phi = np.zeros((params.m, params.n))
    grad_alpha = np.zeros(depth)
    carry = np.zeros_like(caches[-1].x)
    for i in range(depth - 1, -1, -1):
        g = carry
        if per_layer_upstreams[i] is not None:
            g = g + np.asarray(per_layer_upstreams[i], dtype=np.float64)
        carry, phi_contrib, alpha_contrib = layer_backward(caches[i], params, i + 1, g)
        grad_phi += phi_contrib
        grad_alpha[i] = alpha_contrib
    return NetworkGradients(grad_phi=grad_phi, grad_alpha=grad_alpha)


def recover_layers(
    params: UnfoldedParams,
    measurements: MeasurementSet,
    x0: Optional[Any] = None,
    depth: Optional[int] = None,
) -> List[FloatArray]:
    """
    Blind recovery: per-layer estimates from one-bit measurements alone.

    Only the learned parameters and the observed measurements enter here; the
    true sensing matrix has no path into this function.
    """
    if not np.array_equal(measurements.threshold, params.threshold):
        raise ValidationError("measurement thresholds differ from the trained thresholds")
    bits = measurements.bits
    if x0 is None:
        x0 = np.zeros(bits.shape[:-1] + (params.n,))
    outputs, _ = network_forward(params, x0, bits, depth=depth)
    return outputs


def recover(
    params: UnfoldedParams,
    measurements: MeasurementSet,
    x0: Optional[Any] = None,
    depth: Optional[int] = None,
) -> FloatArray:
    """Blind recovery: final-layer estimate."""
    return recover_layers(params, measurements, x0=x0, depth=depth)[-1]
