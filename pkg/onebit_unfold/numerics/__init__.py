from onebit_unfold.numerics.linalg import (
    FloatArray,
    as_matrix,
    as_rows,
    as_vector,
    cholesky_lower,
    l2_normalize,
    l2_norms,
    top_k_indices,
    top_k_mask,
)
from onebit_unfold.numerics.rng import SeededRng, Stream, offset_seed

__all__ = [
    "FloatArray",
    "SeededRng",
    "Stream",
    "as_matrix",
    "as_rows",
    "as_vector",
    "cholesky_lower",
    "l2_normalize",
    "l2_norms",
    "offset_seed",
    "top_k_indices",
    "top_k_mask",
]
