"""
Recovery metrics.

One-bit measurements with a zero threshold carry no amplitude information, so
NMSE compares directions: ||u(estimate) - u(truth)||^2 with u(v) = v / ||v||
and u(0) = 0.
"""
from typing import Any

import numpy as np

from onebit_unfold.core.exceptions import DimensionMismatch, ZeroTruth
from onebit_unfold.numerics.linalg import FloatArray, as_rows, as_vector, l2_normalize, l2_norms


def nmse(estimate: Any, truth: Any) -> float:
    """Squared distance between the unit-normalized estimate and truth."""
    est = as_vector(estimate, "estimate")
    ref = as_vector(truth, "truth")
    if est.shape != ref.shape:
        raise DimensionMismatch(f"estimate {est.shape} and truth {ref.shape} differ")
    if not np.any(ref):
        raise ZeroTruth("NMSE is undefined for an all-zero truth vector")
    diff = l2_normalize(est) - l2_normalize(ref)
    return float(np.sum(diff * diff))


def batch_nmse(estimates: Any, truths: Any) -> FloatArray:
    """Row-wise NMSE of a batch of estimates against a batch of truths."""
    est = np.atleast_2d(as_rows(estimates, "estimates"))
    ref = np.atleast_2d(as_rows(truths, "truths"))
    if est.shape != ref.shape:
        raise DimensionMismatch(f"estimates {est.shape} and truths {ref.shape} differ")
    if np.any(l2_norms(ref) == 0.0):
        raise ZeroTruth("NMSE is undefined for an all-zero truth vector")
    diff = l2_normalize(est) - l2_normalize(ref)
    return np.sum(diff * diff, axis=-1)
