"""
Dense linear-algebra helpers shared by the sensing model and the unfolded network.

Vectors are 1-D float64 arrays; batches of vectors are stacked as rows of a 2-D
array and every helper here works along the last axis.
"""
from typing import Any

import numpy as np
import numpy.typing as npt

from onebit_unfold.core.exceptions import (
    DimensionMismatch,
    InvalidSparsity,
    NonFiniteValue,
    NotPositiveDefinite,
)

FloatArray = npt.NDArray[np.float64]
IndexArray = npt.NDArray[np.intp]
BoolArray = npt.NDArray[np.bool_]

SYMMETRY_TOLERANCE = 1e-12


def as_vector(values: Any, name: str = "vector") -> FloatArray:
    """Coerce to a finite 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(
            f"{name} must be 1-D, got shape {arr.shape}",
            details={"name": name, "shape": list(arr.shape)},
        )
    _require_finite(arr, name)
    return arr


def as_matrix(values: Any, name: str = "matrix") -> FloatArray:
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(
            f"{name} must be 2-D, got shape {arr.shape}",
            details={"name": name, "shape": list(arr.shape)},
        )
    _require_finite(arr, name)
    return arr


def as_rows(values: Any, name: str = "batch") -> FloatArray:
    """Coerce a vector or a row-stacked batch of vectors to a finite float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise DimensionMismatch(
            f"{name} must be a vector or a batch of row vectors, got shape {arr.shape}",
            details={"name": name, "shape": list(arr.shape)},
        )
    _require_finite(arr, name)
    return arr


def _require_finite(arr: FloatArray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains NaN or infinite entries", details={"name": name})


def frozen(arr: FloatArray) -> FloatArray:
    """Return a read-only copy of an array."""
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def top_k_indices(v: Any, k: int) -> IndexArray:
    """
    Indices of the k largest entries of v by magnitude.

    Ties are broken by the lower index; k larger than len(v) selects every index.
    """
    if k < 0:
        raise InvalidSparsity(f"k must be non-negative, got {k}", details={"k": k})
    arr = as_vector(v)
    order = np.argsort(-np.abs(arr), kind="stable")
    return order[: min(k, arr.shape[0])]


def top_k_mask(v: FloatArray, k: int) -> BoolArray:
    """Boolean mask of the top-k magnitudes along the last axis (same tie rule)."""
    if k < 0:
        raise InvalidSparsity(f"k must be non-negative, got {k}", details={"k": k})
    mask = np.zeros(v.shape, dtype=bool)
    keep = min(k, v.shape[-1])
    if keep == 0:
        return mask
    order = np.argsort(-np.abs(v), axis=-1, kind="stable")[..., :keep]
    np.put_along_axis(mask, order, True, axis=-1)
    return mask


def l2_norms(v: FloatArray) -> FloatArray:
    """Euclidean norms along the last axis, keeping that axis for broadcasting."""
    return np.sqrt(np.sum(v * v, axis=-1, keepdims=True))


def l2_normalize(v: Any) -> FloatArray:
    """Scale to unit l2 norm along the last axis; zero vectors pass through unchanged."""
    arr = np.asarray(v, dtype=np.float64)
    norms = l2_norms(arr)
    safe = np.where(norms > 0.0, norms, 1.0)
    return np.where(norms > 0.0, arr / safe, arr)


def cholesky_lower(cov: Any) -> FloatArray:
    """Lower-triangular L with L @ L.T == cov for a symmetric positive definite cov."""
    c = as_matrix(cov, "covariance")
    if c.shape[0] != c.shape[1]:
        raise DimensionMismatch(
            f"covariance must be square, got shape {c.shape}",
            details={"shape": list(c.shape)},
        )
    scale = max(1.0, float(np.max(np.abs(c))))
    if not np.allclose(c, c.T, rtol=0.0, atol=SYMMETRY_TOLERANCE * scale):
        raise NotPositiveDefinite("covariance matrix is not symmetric")
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"covariance matrix is not positive definite: {e}")
