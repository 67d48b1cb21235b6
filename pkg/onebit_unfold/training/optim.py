"""
Adam with bias correction over a single parameter block.
"""
from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np

from onebit_unfold.core.exceptions import ShapeMismatch, ValidationError
from onebit_unfold.numerics.linalg import FloatArray


@dataclass(frozen=True)
class AdamState:
    """Moment estimates, step count and hyperparameters of one Adam run."""

    first_moment: FloatArray
    second_moment: FloatArray
    step_count: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ValidationError(f"lr must be >= 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValidationError("beta1 and beta2 must lie in [0, 1)")
        if self.eps <= 0:
            raise ValidationError(f"eps must be positive, got {self.eps}")
        if self.first_moment.shape != self.second_moment.shape:
            raise ShapeMismatch("first and second moments must have the same shape")

    @classmethod
    def fresh(
        cls,
        shape: Tuple[int, ...],
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> "AdamState":
        return cls(
            first_moment=np.zeros(shape),
            second_moment=np.zeros(shape),
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(
    state: AdamState, params: Any, grads: Any
) -> Tuple[FloatArray, AdamState]:
    """
    One Adam update.

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2;
    params <- params - lr * m_hat / (sqrt(v_hat) + eps)
    """
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != g.shape or p.shape != state.first_moment.shape:
        raise ShapeMismatch(
            f"params {p.shape}, grads {g.shape} and state {state.first_moment.shape} differ"
        )

    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    updated = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

    new_state = AdamState(
        first_moment=m,
        second_moment=v,
        step_count=t,
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
    )
    return updated, new_state
