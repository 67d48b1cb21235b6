"""
Tests for the unfolded network: forward pass, BIHT equivalence, hand-derived
gradients and the blind recovery path.
"""
import dataclasses
import inspect
import math
from typing import List, Optional, Tuple

import numpy as np
import pytest

from onebit_unfold.core.exceptions import DimensionMismatch, StaleCache, ValidationError
from onebit_unfold.network.unfolded import (
    LayerCache,
    NetworkGradients,
    UnfoldedParams,
    layer_backward,
    layer_forward,
    network_backward,
    network_forward,
    recover,
    recover_layers,
    ste_backward,
)
from onebit_unfold.sensing.model import BihtConfig, MeasurementSet, biht_iterate, quantize_one_bit
from tests.fixtures import oracles

N, M, K, DEPTH = 6, 10, 2, 3
STEP = 1e-6
MARGIN = 1e-4
NORM_FLOOR = 0.1


def _params(
    rng: np.random.Generator,
    n: int = N,
    m: int = M,
    k: int = K,
    depth: int = DEPTH,
    alphas: Optional[List[float]] = None,
    normalize: bool = True,
    clip: float = 1.0,
    phi_scale: float = 0.5,
) -> UnfoldedParams:
    steps = alphas if alphas is not None else list(rng.uniform(0.1, 0.6, size=depth))
    return UnfoldedParams(
        phi=phi_scale * rng.standard_normal((m, n)),
        step_sizes=np.asarray(steps, dtype=np.float64),
        sparsity=k,
        threshold=0.1 * rng.standard_normal(m),
        normalize_per_layer=normalize,
        ste_clip=clip,
    )


def _sparse_unit(rng: np.random.Generator, n: int = N, k: int = K) -> np.ndarray:
    x = np.zeros(n)
    x[rng.choice(n, size=k, replace=False)] = rng.standard_normal(k)
    return x / np.linalg.norm(x)


class TestSte:
    """Test the straight-through estimator."""

    def test_clip_rule(self):
        np.testing.assert_array_equal(ste_backward([0.5, 2.0], [3.0, 4.0], 1.0), [3.0, 0.0])

    def test_infinite_clip_is_identity(self):
        np.testing.assert_array_equal(ste_backward([0.5, 200.0], [3.0, 4.0], math.inf), [3.0, 4.0])

    def test_boundary_included(self):
        np.testing.assert_array_equal(ste_backward([-1.0, 1.0], [5.0, 6.0], 1.0), [5.0, 6.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            ste_backward([1.0, 2.0], [1.0], 1.0)


class TestParams:
    """Test parameter validation."""

    def test_rejects_empty_step_sizes(self):
        with pytest.raises(ValidationError):
            UnfoldedParams(phi=np.ones((2, 2)), step_sizes=np.array([]), sparsity=1,
                           threshold=np.zeros(2))

    def test_rejects_non_positive_clip(self):
        with pytest.raises(ValidationError):
            UnfoldedParams(phi=np.ones((2, 2)), step_sizes=np.ones(1), sparsity=1,
                           threshold=np.zeros(2), ste_clip=0.0)

    def test_rejects_threshold_mismatch(self):
        with pytest.raises(DimensionMismatch):
            UnfoldedParams(phi=np.ones((2, 2)), step_sizes=np.ones(1), sparsity=1,
                           threshold=np.zeros(3))


class TestForward:
    """Test layer and network forward passes."""

    def test_zero_step_is_normalized_threshold(self):
        """Test alpha_i = 0 gives normalize(H_k(x))."""
        rng = np.random.default_rng(0)
        params = _params(rng, alphas=[0.0, 0.0, 0.0])
        x = rng.standard_normal(N)
        y = quantize_one_bit(params.phi, rng.standard_normal(N), params.threshold)

        out, _ = layer_forward(params, 1, x, y)

        expected = oracles.normalize(oracles.hard_threshold(x.tolist(), K))
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-15)

    def test_consistent_sparse_unit_is_fixed_point(self):
        rng = np.random.default_rng(1)
        params = _params(rng)
        x = _sparse_unit(rng)
        y = quantize_one_bit(params.phi, x, params.threshold)

        out, _ = layer_forward(params, 2, x, y)

        np.testing.assert_allclose(out, x, rtol=0, atol=1e-14)

    def test_matches_scalar_transcription(self):
        """Test a random n=6, m=10, k=2 layer against the loop oracle."""
        rng = np.random.default_rng(2)
        params = _params(rng)
        x = rng.standard_normal(N)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)

        out, cache = layer_forward(params, 3, x, y)

        expected = oracles.biht_step(
            params.phi.tolist(), x.tolist(), y.tolist(), params.threshold.tolist(),
            float(params.step_sizes[2]), K, True,
        )
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)
        assert cache.layer_index == 3
        np.testing.assert_array_equal(cache.x, x)

    def test_single_layer_network_is_layer_forward(self):
        rng = np.random.default_rng(3)
        params = _params(rng)
        x0 = rng.standard_normal(N)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)

        outputs, caches = network_forward(params, x0, y, depth=1)
        single, _ = layer_forward(params, 1, x0, y)

        assert len(outputs) == len(caches) == 1
        np.testing.assert_array_equal(outputs[0], single)

    def test_zero_steps_from_zero_stay_zero(self):
        rng = np.random.default_rng(4)
        params = _params(rng, alphas=[0.0, 0.0, 0.0])
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)

        outputs, _ = network_forward(params, np.zeros(N), y)

        for out in outputs:
            np.testing.assert_array_equal(out, np.zeros(N))

    def test_outputs_sparse_and_unit(self):
        rng = np.random.default_rng(5)
        params = _params(rng, depth=6)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)

        outputs, _ = network_forward(params, np.zeros(N), y)

        for out in outputs:
            assert np.count_nonzero(out) <= K
            norm = np.linalg.norm(out)
            assert norm == 0.0 or norm == pytest.approx(1.0, abs=1e-12)

    def test_depth_bounds(self):
        rng = np.random.default_rng(6)
        params = _params(rng)
        y = np.ones(M)

        with pytest.raises(ValidationError):
            network_forward(params, np.zeros(N), y, depth=DEPTH + 1)
        with pytest.raises(ValidationError):
            layer_forward(params, 0, np.zeros(N), y)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(7)
        params = _params(rng)

        with pytest.raises(DimensionMismatch):
            layer_forward(params, 1, np.zeros(N + 1), np.ones(M))
        with pytest.raises(DimensionMismatch):
            layer_forward(params, 1, np.zeros(N), np.ones(M - 1))


class TestBihtEquivalence:
    """Test shared step sizes reproduce BIHT exactly."""

    @pytest.mark.parametrize("normalize", [True, False])
    def test_bit_identical_trajectories(self, normalize):
        """Test 50 random instances: layer outputs equal BIHT iterates 1..L'."""
        rng = np.random.default_rng(100 if normalize else 101)
        for _ in range(50):
            n, m, k, depth = 8, 24, 3, 5
            alpha = float(rng.uniform(0.05, 2.0))
            params = _params(rng, n=n, m=m, k=k, depth=depth, alphas=[alpha] * depth,
                             normalize=normalize, phi_scale=1.0)
            y = quantize_one_bit(
                params.phi, _sparse_unit(rng, n, k), params.threshold, rng.standard_normal(m)
            )

            outputs, _ = network_forward(params, np.zeros(n), y)
            _, trajectory = biht_iterate(
                params.phi, y, params.threshold,
                BihtConfig(sparsity=k, step_size=alpha, iterations=depth,
                           normalize_each_iteration=normalize),
            )

            for out, iterate in zip(outputs, trajectory[1:]):
                np.testing.assert_array_equal(out, iterate)


def _surrogate_loss(
    params: UnfoldedParams, x0: np.ndarray, y: np.ndarray, target: np.ndarray, all_layers: bool
) -> float:
    outputs, _ = network_forward(params, x0, y, surrogate=True)
    if all_layers:
        return sum(float(np.sum((out - target) ** 2)) for out in outputs)
    return float(np.sum((outputs[-1] - target) ** 2))


def _well_separated(caches: List[LayerCache], params: UnfoldedParams) -> bool:
    for cache in caches:
        if np.any(np.abs(np.abs(cache.u) - params.ste_clip) <= MARGIN):
            return False
        magnitudes = np.sort(np.abs(cache.v))[::-1]
        if params.sparsity < magnitudes.shape[0]:
            if magnitudes[params.sparsity - 1] - magnitudes[params.sparsity] <= MARGIN:
                return False
        if np.any(cache.z_norm <= NORM_FLOOR):
            return False
    return True


def _gradient_instance(
    rng: np.random.Generator, all_layers: bool
) -> Optional[Tuple[UnfoldedParams, np.ndarray, np.ndarray, np.ndarray, NetworkGradients]]:
    params = _params(rng)
    x0 = rng.standard_normal(N)
    x0 /= np.linalg.norm(x0)
    target = _sparse_unit(rng)
    y = quantize_one_bit(params.phi, target, params.threshold, 0.3 * rng.standard_normal(M))

    outputs, caches = network_forward(params, x0, y, surrogate=True)
    if not _well_separated(caches, params):
        return None
    if all_layers:
        upstreams: List[Optional[np.ndarray]] = [2.0 * (out - target) for out in outputs]
    else:
        upstreams = [None] * (DEPTH - 1) + [2.0 * (outputs[-1] - target)]
    grads = network_backward(caches, params, DEPTH, upstreams)
    if np.linalg.norm(grads.grad_phi) < 0.1:
        return None
    return params, x0, y, target, grads


def _finite_differences(
    params: UnfoldedParams, x0: np.ndarray, y: np.ndarray, target: np.ndarray, all_layers: bool
) -> Tuple[np.ndarray, np.ndarray]:
    fd_phi = np.zeros_like(params.phi)
    for idx in np.ndindex(*params.phi.shape):
        plus, minus = params.phi.copy(), params.phi.copy()
        plus[idx] += STEP
        minus[idx] -= STEP
        fd_phi[idx] = (
            _surrogate_loss(params.with_updates(phi=plus), x0, y, target, all_layers)
            - _surrogate_loss(params.with_updates(phi=minus), x0, y, target, all_layers)
        ) / (2.0 * STEP)

    fd_alpha = np.zeros(params.depth)
    for i in range(params.depth):
        plus, minus = params.step_sizes.copy(), params.step_sizes.copy()
        plus[i] += STEP
        minus[i] -= STEP
        fd_alpha[i] = (
            _surrogate_loss(params.with_updates(step_sizes=plus), x0, y, target, all_layers)
            - _surrogate_loss(params.with_updates(step_sizes=minus), x0, y, target, all_layers)
        ) / (2.0 * STEP)
    return fd_phi, fd_alpha


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


class TestGradients:
    """Test hand-derived gradients against central finite differences in surrogate mode."""

    @pytest.mark.parametrize("all_layers", [False, True])
    def test_network_gradients_match_finite_differences(self, all_layers):
        """Test 100 rejection-sampled instances (n=6, m=10, k=2, L'=3)."""
        rng = np.random.default_rng(2024 if all_layers else 2025)
        checked = 0
        attempts = 0
        while checked < 100:
            attempts += 1
            assert attempts < 2000, "too many rejected instances"
            instance = _gradient_instance(rng, all_layers)
            if instance is None:
                continue
            params, x0, y, target, grads = instance

            fd_phi, fd_alpha = _finite_differences(params, x0, y, target, all_layers)

            analytic = np.concatenate([grads.grad_phi.ravel(), grads.grad_alpha])
            numeric = np.concatenate([fd_phi.ravel(), fd_alpha])
            assert _relative_error(analytic, numeric) < 1e-6
            checked += 1

    def test_layer_input_gradient_matches_finite_differences(self):
        """Test grad_x of a single layer on 20 instances."""
        rng = np.random.default_rng(77)
        checked = 0
        while checked < 20:
            params = _params(rng)
            x = rng.standard_normal(N)
            y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)
            weights = rng.standard_normal(N)
            _, cache = layer_forward(params, 1, x, y, surrogate=True)
            if not _well_separated([cache], params):
                continue

            grad_x, _, _ = layer_backward(cache, params, 1, weights)

            numeric = np.zeros(N)
            for j in range(N):
                plus, minus = x.copy(), x.copy()
                plus[j] += STEP
                minus[j] -= STEP
                out_plus, _ = layer_forward(params, 1, plus, y, surrogate=True)
                out_minus, _ = layer_forward(params, 1, minus, y, surrogate=True)
                numeric[j] = (weights @ out_plus - weights @ out_minus) / (2.0 * STEP)
            assert _relative_error(grad_x, numeric) < 1e-6
            checked += 1

    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(8)
        params = _params(rng)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)
        _, caches = network_forward(params, rng.standard_normal(N), y)

        grad_x, grad_phi, grad_alpha = layer_backward(caches[0], params, 1, np.zeros(N))
        totals = network_backward(caches, params, DEPTH, [None, np.zeros(N), None])

        np.testing.assert_array_equal(grad_x, np.zeros(N))
        np.testing.assert_array_equal(grad_phi, np.zeros((M, N)))
        assert grad_alpha == 0.0
        np.testing.assert_array_equal(totals.grad_phi, np.zeros((M, N)))
        np.testing.assert_array_equal(totals.grad_alpha, np.zeros(DEPTH))

    def test_zero_step_identity_ste_specialization(self):
        """Test D = I and alpha = 0: grad_x = M N^T g, grad_phi = 0, grad_alpha = <p, g_v>."""
        rng = np.random.default_rng(9)
        params = _params(rng, alphas=[0.0, 0.0, 0.0], clip=1e6)
        x = rng.standard_normal(N)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)
        upstream = rng.standard_normal(N)
        _, cache = layer_forward(params, 1, x, y)

        grad_x, grad_phi, grad_alpha = layer_backward(cache, params, 1, upstream)

        w = cache.z / cache.z_norm
        jacobian = (np.eye(N) - np.outer(w, w)) / cache.z_norm
        g_v = np.where(cache.mask, jacobian.T @ upstream, 0.0)
        np.testing.assert_allclose(grad_x, g_v, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(grad_phi, np.zeros((M, N)))
        assert grad_alpha == pytest.approx(float(cache.p @ g_v), abs=1e-12)

    def test_single_layer_network_backward(self):
        rng = np.random.default_rng(10)
        params = _params(rng)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)
        upstream = rng.standard_normal(N)
        _, caches = network_forward(params, rng.standard_normal(N), y, depth=1)

        totals = network_backward(caches, params, 1, [upstream])
        _, grad_phi, grad_alpha = layer_backward(caches[0], params, 1, upstream)

        np.testing.assert_array_equal(totals.grad_phi, grad_phi)
        assert totals.grad_alpha[0] == grad_alpha

    def test_batch_gradient_is_sum_of_samples(self):
        rng = np.random.default_rng(11)
        params = _params(rng)
        targets = np.stack([_sparse_unit(rng) for _ in range(4)])
        bits = quantize_one_bit(params.phi, targets, params.threshold)
        x0 = np.zeros((4, N))

        outputs, caches = network_forward(params, x0, bits)
        batch = network_backward(caches, params, DEPTH, [None, None, 2.0 * (outputs[-1] - targets)])

        total = NetworkGradients.zeros(M, N, DEPTH)
        for row in range(4):
            outs, cs = network_forward(params, x0[row], bits[row])
            total = total + network_backward(cs, params, DEPTH, [None, None, 2.0 * (outs[-1] - targets[row])])
        np.testing.assert_allclose(batch.grad_phi, total.grad_phi, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(batch.grad_alpha, total.grad_alpha, rtol=1e-9, atol=1e-12)

    def test_backward_is_pure(self):
        """Test caches and params are unchanged by the backward pass."""
        rng = np.random.default_rng(12)
        params = _params(rng)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)
        outputs, caches = network_forward(params, rng.standard_normal(N), y)
        snapshot = [dataclasses.replace(c, x=c.x.copy(), u=c.u.copy(), v=c.v.copy()) for c in caches]
        phi_before = params.phi.copy()

        network_backward(caches, params, DEPTH, [o for o in outputs])

        np.testing.assert_array_equal(params.phi, phi_before)
        for before, after in zip(snapshot, caches):
            np.testing.assert_array_equal(before.x, after.x)
            np.testing.assert_array_equal(before.u, after.u)
            np.testing.assert_array_equal(before.v, after.v)

    def test_stale_cache(self):
        rng = np.random.default_rng(13)
        params = _params(rng)
        y = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)
        _, caches = network_forward(params, np.zeros(N), y)

        with pytest.raises(StaleCache):
            layer_backward(caches[0], params, 2, np.zeros(N))
        with pytest.raises(StaleCache):
            layer_backward(caches[0], params, 1, np.zeros(N + 1))
        with pytest.raises(StaleCache):
            network_backward(caches[:2], params, DEPTH, [None, None, None])
        other = _params(rng, m=M + 1)
        with pytest.raises(StaleCache):
            layer_backward(caches[0], other, 1, np.zeros(N))


class TestBlindRecovery:
    """Test the inference path cannot see the true sensing matrix."""

    def test_signature_has_no_matrix_input(self):
        """Test recovery consumes only learned params, measurements and x0."""
        for fn in (recover, recover_layers):
            assert list(inspect.signature(fn).parameters) == ["params", "measurements", "x0", "depth"]
        assert [f.name for f in dataclasses.fields(MeasurementSet)] == ["bits", "threshold"]

    def test_recover_equals_final_network_output(self):
        rng = np.random.default_rng(14)
        params = _params(rng)
        bits = quantize_one_bit(params.phi, _sparse_unit(rng), params.threshold)

        estimate = recover(params, MeasurementSet(bits=bits, threshold=params.threshold))
        outputs, _ = network_forward(params, np.zeros(N), bits)

        np.testing.assert_array_equal(estimate, outputs[-1])

    def test_threshold_mismatch_rejected(self):
        rng = np.random.default_rng(15)
        params = _params(rng)

        with pytest.raises(ValidationError, match="thresholds"):
            recover(params, MeasurementSet(bits=np.ones(M), threshold=params.threshold + 1.0))
