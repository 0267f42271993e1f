import math

import numpy as np
import pytest

from tempolink import tensor as tl
from tempolink.errors import EmptySupportError, NonFiniteError, ShapeError
from tempolink.tensor import Tensor

from helpers import away_from_kinks, central_diff_grad, max_rel_error


class TestMatmul:
    def test_identity_leaves_matrix_unchanged(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(3, 3))
        out = tl.matmul(Tensor(np.eye(3)), Tensor(m))
        assert np.array_equal(out.data, m)

    def test_zero_matrix_annihilates(self):
        m = np.random.default_rng(1).normal(size=(3, 3))
        out = tl.matmul(Tensor(np.zeros((3, 3))), Tensor(m))
        assert np.array_equal(out.data, np.zeros((3, 3)))

    def test_two_hop_chain_entry(self):
        # 3-node chain 0 -> 1 -> 2: squaring the adjacency puts a 1 at (0, 2)
        a = np.zeros((3, 3))
        a[0, 1] = 1
        a[1, 2] = 1
        out = tl.matmul(Tensor(a), Tensor(a))
        assert out.data[0, 2] == 1.0

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError) as err:
            tl.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))
        assert "(2, 3)" in str(err.value) and "(4, 2)" in str(err.value)

    def test_associativity_on_random_matrices(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a, b, c = (rng.uniform(-1, 1, size=(4, 4)) for _ in range(3))
            left = (Tensor(a) @ Tensor(b)) @ Tensor(c)
            right = Tensor(a) @ (Tensor(b) @ Tensor(c))
            assert np.abs(left.data - right.data).max() < 1e-9

    def test_vector_cases(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(3, 4))
        v = rng.normal(size=4)
        u = rng.normal(size=3)
        assert np.allclose(tl.matmul(Tensor(m), Tensor(v)).data, m @ v)
        assert np.allclose(tl.matmul(Tensor(u), Tensor(m)).data, u @ m)
        assert np.allclose(tl.matmul(Tensor(v), Tensor(v)).data, v @ v)


class TestSoftmaxMasked:
    def test_symmetric_pair(self):
        out = tl.softmax_masked(Tensor([1.0, 1.0]), np.array([True, True]))
        assert np.allclose(out.data, [0.5, 0.5])

    def test_singleton_support(self):
        out = tl.softmax_masked(Tensor([5.0, -3.0, 7.0]), np.array([False, True, False]))
        assert np.array_equal(out.data, [0.0, 1.0, 0.0])

    def test_analytic_two_to_one(self):
        out = tl.softmax_masked(Tensor([0.0, math.log(2.0)]), np.array([True, True]))
        assert np.allclose(out.data, [1.0 / 3.0, 2.0 / 3.0])

    def test_empty_support_raises(self):
        with pytest.raises(EmptySupportError):
            tl.softmax_masked(Tensor([1.0, 2.0]), np.array([False, False]))
        with pytest.raises(EmptySupportError):
            tl.softmax_masked(
                Tensor(np.ones((2, 2))), np.array([[True, False], [False, False]])
            )

    def test_simplex_restricted_to_support(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            logits = rng.normal(scale=5.0, size=(6, 6))
            allowed = rng.random((6, 6)) < 0.5
            allowed[:, 0] = True  # keep every row's support nonempty
            out = tl.softmax_masked(Tensor(logits), allowed).data
            assert np.all(out[~allowed] == 0.0)
            assert np.all(out[allowed] > 0.0)
            assert np.abs(out.sum(axis=1) - 1.0).max() < 1e-9

    def test_huge_disallowed_logit_does_not_overflow(self):
        out = tl.softmax_masked(Tensor([1e6, 0.0, 1.0]), np.array([False, True, True]))
        assert out.data[0] == 0.0
        assert abs(out.data.sum() - 1.0) < 1e-12


class TestLayerNorm:
    def test_constant_vector_maps_to_zero(self):
        for c in (0.0, 3.5, -2.0):
            out = tl.layer_norm(Tensor([c, c, c]))
            assert np.array_equal(out.data, np.zeros(3))

    def test_already_normalized_pair(self):
        out = tl.layer_norm(Tensor([1.0, -1.0]))
        assert np.abs(out.data - np.array([1.0, -1.0])).max() < 1e-4

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=8)
        for c in (0.7, -123.0):
            a = tl.layer_norm(Tensor(x)).data
            b = tl.layer_norm(Tensor(x + c)).data
            assert np.abs(a - b).max() < 1e-9

    def test_rowwise_on_matrix(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(4, 6))
        out = tl.layer_norm(Tensor(x)).data
        assert np.abs(out.mean(axis=1)).max() < 1e-12
        assert np.abs(out.var(axis=1) - 1.0).max() < 1e-4


class TestActivations:
    def test_pointwise_values(self):
        assert tl.leaky_relu(Tensor([-1.0]), alpha=0.2).data[0] == pytest.approx(-0.2)
        assert tl.elu(Tensor([0.0])).data[0] == 0.0
        assert tl.relu(Tensor([-3.0])).data[0] == 0.0
        assert tl.sigmoid(Tensor([0.0])).data[0] == 0.5
        assert tl.tanh(Tensor([0.0])).data[0] == 0.0

    def test_elu_negative_branch(self):
        assert tl.elu(Tensor([-1.0])).data[0] == pytest.approx(math.exp(-1.0) - 1.0)


class TestDebugChecks:
    def test_nan_detected_when_enabled(self):
        with pytest.raises(NonFiniteError):
            Tensor([1.0, float("nan")])

    def test_nan_allowed_when_disabled(self):
        tl.set_debug_checks(False)
        t = Tensor([float("inf")])
        assert np.isinf(t.data).any()
        tl.set_debug_checks(True)


class TestPrecision:
    def test_default_is_float64(self):
        assert Tensor([1.0]).data.dtype == np.float64

    def test_float32_selectable(self):
        tl.set_default_precision(32)
        assert Tensor([1.0]).data.dtype == np.float32

    def test_rejects_other_widths(self):
        with pytest.raises(ValueError):
            tl.set_default_precision(16)


class TestBackward:
    def test_requires_scalar(self):
        t = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(ShapeError):
            (t * 2.0).backward()

    def test_grad_shapes_match_parameters(self):
        rng = np.random.default_rng(6)
        a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
        tl.tensor_sum(tl.matmul(a, b)).backward()
        assert a.grad.shape == a.data.shape
        assert b.grad.shape == b.data.shape

    def test_grad_accumulates_across_backward_calls(self):
        a = Tensor([2.0], requires_grad=True)
        (a * 3.0)[0].backward()
        first = a.grad.copy()
        (a * 3.0)[0].backward()
        assert np.allclose(a.grad, 2 * first)

    def test_reused_node_accumulates(self):
        a = Tensor([1.0, 2.0], requires_grad=True)
        out = tl.tensor_sum(a * a + a)
        out.backward()
        assert np.allclose(a.grad, 2 * a.data + 1.0)


def _check_op_gradient(build, x, tol=1e-4):
    """FD-check d(sum of op output * fixed weights)/dx for one op."""
    rng = np.random.default_rng(99)
    probe = rng.normal(size=np.asarray(build(Tensor(x)).data).shape)

    def scalar(values):
        return float((build(Tensor(values)).data * probe).sum())

    leaf = Tensor(x, requires_grad=True)
    out = tl.tensor_sum(build(leaf) * Tensor(probe))
    out.backward()
    numeric = central_diff_grad(scalar, x)
    worst = max_rel_error(leaf.grad, numeric)
    assert worst < tol, f"max relative error {worst:.3e}"


class TestGradientsAgainstFiniteDifferences:
    """Every differentiable primitive matches central differences (64-bit)."""

    def setup_method(self):
        self.rng = np.random.default_rng(11)

    def test_add_broadcast(self):
        other = Tensor(self.rng.uniform(-1, 1, size=(1, 4)))
        _check_op_gradient(lambda t: t + other, self.rng.uniform(-1, 1, size=(3, 4)))

    def test_sub(self):
        other = Tensor(self.rng.uniform(-1, 1, size=(3, 4)))
        _check_op_gradient(lambda t: other - t, self.rng.uniform(-1, 1, size=(3, 4)))

    def test_mul_broadcast(self):
        other = Tensor(self.rng.uniform(0.5, 1.5, size=(3, 1)))
        _check_op_gradient(lambda t: t * other, self.rng.uniform(-1, 1, size=(3, 4)))

    def test_power_square(self):
        _check_op_gradient(lambda t: tl.power(t, 2.0), self.rng.uniform(-1, 1, size=(3, 3)))

    def test_power_inverse_sqrt(self):
        _check_op_gradient(lambda t: tl.power(t, -0.5), self.rng.uniform(0.5, 2.0, size=(4,)))

    def test_matmul_both_sides(self):
        a = self.rng.uniform(-1, 1, size=(3, 4))
        b = self.rng.uniform(-1, 1, size=(4, 2))
        _check_op_gradient(lambda t: tl.matmul(t, Tensor(b)), a)
        _check_op_gradient(lambda t: tl.matmul(Tensor(a), t), b)

    def test_matmul_matrix_vector(self):
        m = self.rng.uniform(-1, 1, size=(3, 4))
        v = self.rng.uniform(-1, 1, size=4)
        _check_op_gradient(lambda t: tl.matmul(Tensor(m), t), v)
        _check_op_gradient(lambda t: tl.matmul(t, Tensor(v)), m)

    def test_matmul_vector_matrix(self):
        m = self.rng.uniform(-1, 1, size=(4, 3))
        v = self.rng.uniform(-1, 1, size=4)
        _check_op_gradient(lambda t: tl.matmul(t, Tensor(m)), v)

    def test_transpose(self):
        _check_op_gradient(tl.transpose, self.rng.uniform(-1, 1, size=(3, 5)))

    def test_reshape(self):
        _check_op_gradient(lambda t: tl.reshape(t, (6,)), self.rng.uniform(-1, 1, size=(2, 3)))

    def test_take_row_and_slice(self):
        x = self.rng.uniform(-1, 1, size=(4, 3))
        _check_op_gradient(lambda t: t[2], x)
        _check_op_gradient(lambda t: t[1:3], x)

    def test_concat_and_stack(self):
        other = Tensor(self.rng.uniform(-1, 1, size=(2, 3)))
        _check_op_gradient(lambda t: tl.concat([t, other], axis=0), self.rng.uniform(-1, 1, size=(2, 3)))
        _check_op_gradient(
            lambda t: tl.stack([t[0], t[1], t[2]]), self.rng.uniform(-1, 1, size=(3, 4))
        )

    def test_sum_and_mean(self):
        x = self.rng.uniform(-1, 1, size=(3, 4))
        _check_op_gradient(lambda t: tl.tensor_sum(t, axis=1), x)
        _check_op_gradient(lambda t: tl.tensor_sum(t, axis=0, keepdims=True), x)
        _check_op_gradient(lambda t: tl.tensor_mean(t, axis=-1, keepdims=True), x)

    def test_activations(self):
        x = away_from_kinks(self.rng, (4, 4))
        _check_op_gradient(tl.relu, x)
        _check_op_gradient(lambda t: tl.leaky_relu(t, alpha=0.2), x)
        _check_op_gradient(tl.elu, x)
        _check_op_gradient(tl.sigmoid, self.rng.uniform(-1, 1, size=(4, 4)))
        _check_op_gradient(tl.tanh, self.rng.uniform(-1, 1, size=(4, 4)))

    def test_softmax_masked(self):
        allowed = self.rng.random((4, 4)) < 0.6
        allowed[:, 1] = True
        _check_op_gradient(
            lambda t: tl.softmax_masked(t, allowed), self.rng.uniform(-1, 1, size=(4, 4))
        )

    def test_layer_norm(self):
        _check_op_gradient(tl.layer_norm, self.rng.uniform(-1, 1, size=(3, 5)))
        _check_op_gradient(tl.layer_norm, self.rng.uniform(-1, 1, size=7))
