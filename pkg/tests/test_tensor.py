import numpy as np
import pytest
from autograd import Tape, Tensor, grad_check, grad_check_params
from autograd.functional import concat, conv1d, elementwise, moments, resolve_padding, stack, take
from autograd.gradcheck import relative_error, worst
from autograd.tensor import broadcast_shape, current_tape
from utils.errors import DimensionError, DomainError, UsageError


def leaf(values):
    return Tensor(values, requires_grad=True)


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.5, -2.0], [0.25, 4.0]])
        assert np.array_equal((Tensor(np.eye(2)) @ Tensor(a)).values, a)

    def test_hand_arithmetic(self):
        out = Tensor([[1.0, 2.0], [3.0, 4.0]]) @ Tensor([[1.0], [1.0]])
        assert np.array_equal(out.values, [[3.0], [7.0]])

    def test_zeros(self, rng):
        out = Tensor(np.zeros((3, 4))) @ Tensor(rng.normal(size=(4, 2)))
        assert out.shape == (3, 2)
        assert not out.values.any()

    def test_inner_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

    def test_batched_gradients(self, rng):
        b = Tensor(rng.normal(size=(2, 4, 3)))
        assert grad_check(lambda x: (x @ b).sum(), Tensor(rng.normal(size=(2, 5, 4)))) < 1e-6


class TestConv1d:
    def test_identity_kernel(self):
        out = conv1d(Tensor([[1.0, 2.0, 3.0]]), Tensor([[[1.0]]]), stride=1)
        assert np.array_equal(out.values, [[1.0, 2.0, 3.0]])

    def test_stride_two_no_padding(self):
        out = conv1d(Tensor([[1.0, 1.0, 1.0, 1.0]]), Tensor([[[1.0, 1.0]]]), stride=2, padding="valid")
        assert np.array_equal(out.values, [[2.0, 2.0]])

    def test_length_formula(self, rng):
        out = conv1d(Tensor(rng.normal(size=(2, 8))), Tensor(rng.normal(size=(3, 2, 4))), stride=2, padding="valid")
        assert out.shape == (3, 3)

    def test_cross_correlation_without_flip(self):
        out = conv1d(Tensor([[0.0, 1.0, 0.0]]), Tensor([[[1.0, 2.0, 3.0]]]), padding="same")
        assert np.array_equal(out.values, [[3.0, 2.0, 1.0]])

    def test_same_padding_keeps_width(self, rng):
        for k in (1, 2, 3, 8):
            out = conv1d(Tensor(rng.normal(size=(2, 9))), Tensor(rng.normal(size=(4, 2, k))))
            assert out.shape == (4, 9)
        assert resolve_padding("same", 4) == (1, 2)

    def test_channel_mismatch(self, rng):
        with pytest.raises(DimensionError):
            conv1d(Tensor(rng.normal(size=(2, 9))), Tensor(rng.normal(size=(4, 3, 3))))

    def test_kernel_wider_than_input(self, rng):
        with pytest.raises(DimensionError):
            conv1d(Tensor(rng.normal(size=(1, 2))), Tensor(rng.normal(size=(1, 1, 5))), padding="valid")

    def test_invalid_stride_and_padding(self, rng):
        x, k = Tensor(rng.normal(size=(1, 6))), Tensor(rng.normal(size=(1, 1, 3)))
        with pytest.raises(UsageError):
            conv1d(x, k, stride=0)
        with pytest.raises(UsageError):
            conv1d(x, k, padding="circular")

    @pytest.mark.parametrize("stride,padding", [(1, "same"), (2, "valid"), (3, (3, 0))])
    def test_gradients(self, rng, stride, padding):
        kernel = Tensor(rng.normal(size=(3, 2, 4)))
        weights = rng.normal(size=conv1d(Tensor(np.zeros((2, 11))), kernel, stride, padding).shape)
        assert grad_check(lambda x: (conv1d(x, kernel, stride, padding).tanh() * weights).sum(),
                          Tensor(rng.normal(size=(2, 11)))) < 1e-4


class TestElementwise:
    def test_relu(self):
        assert elementwise("relu", Tensor(-3.0)).item() == 0.0

    def test_elu(self):
        assert elementwise("elu", Tensor(0.0)).item() == 0.0
        assert elementwise("elu", Tensor(-30.0)).item() == pytest.approx(-1.0, abs=1e-9)

    def test_softmax_symmetry(self):
        assert np.array_equal(elementwise("softmax", Tensor([0.0, 0.0])).values, [0.5, 0.5])

    def test_softmax_is_probability_vector(self, rng):
        out = Tensor(rng.normal(scale=20.0, size=(5, 7))).softmax(axis=1).values
        assert (out >= 0).all()
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            elementwise("log", Tensor([1.0, 0.0]))
        with pytest.raises(DomainError):
            Tensor([-1.0]).sqrt()

    def test_unknown_op(self):
        with pytest.raises(UsageError):
            elementwise("tan", Tensor(1.0))

    def test_broadcasting_leading_dims(self):
        assert broadcast_shape((3, 1, 4), (5, 4)) == (3, 5, 4)
        with pytest.raises(DimensionError):
            Tensor(np.ones((2, 3))) + Tensor(np.ones((3, 2)))

    def test_size_one_axes_broadcast_anywhere(self, rng):
        # per-channel columns (C, 1) against (C, T) feature maps
        assert broadcast_shape((4, 1), (4, 7)) == (4, 7)
        assert broadcast_shape((1, 7), (4, 1)) == (4, 7)
        bias = Tensor(rng.normal(size=(4, 1)))
        x = Tensor(rng.normal(size=(4, 7)))
        assert np.array_equal((x + bias).values, x.values + bias.values)
        with pytest.raises(DimensionError):
            broadcast_shape((4, 2), (4, 7))
        with pytest.raises(DimensionError):
            broadcast_shape((7, 4), (4, 7))

    def test_size_one_column_gradient_sums_over_time(self, rng):
        bias = Tensor(rng.normal(size=(4, 1)))
        x = Tensor(rng.normal(size=(4, 7)))
        weights = rng.normal(size=(4, 7))
        assert grad_check(lambda b: ((x + b).tanh() * weights).sum(), bias) < 1e-4

    @pytest.mark.parametrize("op", ["add", "sub", "mul"])
    def test_binary_gradients_with_broadcast(self, rng, op):
        other = Tensor(rng.normal(size=(4,)))
        weights = rng.normal(size=(3, 4))
        for _ in range(5):
            x = Tensor(rng.normal(size=(3, 4)))
            assert grad_check(lambda t: (elementwise(op, t, other).tanh() * weights).sum(), x) < 1e-4

    @pytest.mark.parametrize("op", ["relu", "elu", "exp", "log", "softmax"])
    def test_unary_gradients(self, rng, op):
        weights = rng.normal(size=(3, 4))
        for _ in range(5):
            x = Tensor(rng.uniform(0.2, 2.0, size=(3, 4)) * rng.choice([-1.0, 1.0], size=(3, 4)))
            if op == "log":
                x = Tensor(np.abs(x.values))
            assert grad_check(lambda t: (elementwise(op, t, axis=1) * weights).sum(), x) < 1e-4


class TestMoments:
    def test_hand_arithmetic(self):
        mean, var = moments(Tensor([1.0, 2.0, 3.0]), axis=0)
        assert mean.item() == pytest.approx(2.0)
        assert var.item() == pytest.approx(2.0 / 3.0)
        mean, var = moments(Tensor([0.0, 2.0]), axis=0)
        assert (mean.item(), var.item()) == (1.0, 1.0)

    def test_constant_vector(self):
        _, var = moments(Tensor(np.full(6, 3.5)), axis=0)
        assert var.item() == 0.0

    def test_empty_axis(self):
        with pytest.raises(DimensionError):
            moments(Tensor(np.zeros((3, 0))), axis=1)

    def test_keepdims(self, rng):
        mean, var = moments(Tensor(rng.normal(size=(3, 5))), axis=1, keepdims=False)
        assert mean.shape == var.shape == (3,)

    def test_gradients(self, rng):
        weights = rng.normal(size=(3, 1))
        assert grad_check(lambda x: (moments(x, axis=1)[1] * weights).sum() + moments(x, axis=1)[0].sum(),
                          Tensor(rng.normal(size=(3, 6)))) < 1e-4


class TestBackward:
    def test_sum(self):
        x = leaf([1.0, -2.0, 3.0])
        with Tape() as tape:
            loss = x.sum()
        tape.backward(loss)
        assert np.array_equal(x.grad, np.ones(3))

    def test_square(self):
        x = leaf([1.0, 2.0])
        with Tape() as tape:
            loss = (x * x).sum()
        tape.backward(loss)
        assert np.array_equal(x.grad, [2.0, 4.0])

    def test_reused_input_accumulates(self):
        x = leaf([3.0])
        with Tape() as tape:
            loss = (x * x + x * 2.0).sum()
        tape.backward(loss)
        assert x.grad[0] == pytest.approx(8.0)

    def test_second_backward_rejected(self):
        x = leaf([1.0, 2.0])
        with Tape() as tape:
            loss = (x * x).sum()
        tape.backward(loss)
        with pytest.raises(UsageError):
            tape.backward(loss)

    def test_reset_allows_new_pass(self):
        x = leaf([1.0, 2.0])
        tape = Tape()
        with tape:
            loss = x.sum()
        tape.backward(loss)
        tape.reset()
        with tape:
            loss = (x * 3.0).sum()
        tape.backward(loss)
        assert np.array_equal(x.grad, [4.0, 4.0])

    def test_leaf_grads_accumulate_until_zeroed(self):
        x = leaf([1.0])
        for _ in range(2):
            with Tape() as tape:
                loss = (x * 5.0).sum()
            tape.backward(loss)
        assert x.grad[0] == 10.0
        x.zero_grad()
        assert x.grad is None

    def test_non_scalar_loss(self):
        x = leaf([1.0, 2.0])
        with Tape() as tape:
            y = x * 2.0
        with pytest.raises(UsageError):
            tape.backward(y)

    def test_no_tape_records_nothing(self):
        x = leaf([1.0])
        y = x * 2.0
        assert current_tape() is None
        with pytest.raises(UsageError):
            y.backward()

    def test_untracked_inputs_are_not_recorded(self):
        with Tape() as tape:
            Tensor([1.0]) * 2.0
        assert len(tape) == 0

    def test_indexing_and_gather(self, rng):
        x = Tensor(rng.normal(size=(4, 3)))
        assert grad_check(
            lambda t: concat([t[1:, ::2], take(t, [0, 0, 3], axis=0)[:, :2]], axis=0).tanh().sum(), x
        ) < 1e-4

    def test_stack_and_reshape(self, rng):
        weights = rng.normal(size=(2, 6, 2))
        assert grad_check(lambda t: (stack([t, t * t], axis=0).reshape(2, 6, 2) * weights).sum(),
                          Tensor(rng.normal(size=(3, 4)))) < 1e-4


class TestGradCheck:
    def test_sum_of_squares(self, rng):
        assert grad_check(lambda x: (x * x).sum(), Tensor(rng.normal(size=(4, 3)))) < 1e-6

    def test_restores_values(self, rng):
        x = Tensor(rng.normal(size=5))
        before = x.values.copy()
        grad_check(lambda t: t.exp().sum(), x)
        assert np.array_equal(x.values, before)
        assert not x.requires_grad

    def test_step_bounds(self, rng):
        with pytest.raises(UsageError):
            grad_check(lambda x: x.sum(), Tensor(rng.normal(size=3)), h=0.0)
        with pytest.raises(UsageError):
            grad_check(lambda x: x.sum(), Tensor(rng.normal(size=3)), h=0.1)

    def test_detects_wrong_gradient(self, rng):
        x = Tensor(rng.normal(size=4))
        detached = lambda t: (t * t.detach()).sum()
        assert grad_check(detached, x) > 0.1

    def test_params(self, rng):
        w = Tensor(rng.normal(size=(3, 2)))
        b = Tensor(rng.normal(size=2))
        x = rng.normal(size=(5, 3))
        errors = grad_check_params(lambda: ((Tensor(x) @ w + b).tanh()).sum(), {"w": w, "b": b})
        assert set(errors) == {"w", "b"}
        assert worst(errors)[1] < 1e-4

    def test_worst_names_the_largest_error(self):
        assert worst({"query.weight": 2e-9, "value.bias": 3e-5, "key.weight": 1e-7}) == ("value.bias", 3e-5)

    def test_relative_error_floor(self):
        assert relative_error(np.array([0.0]), np.array([0.0]))[0] == 0.0
        assert relative_error(np.array([1.0]), np.array([0.5]))[0] == pytest.approx(0.5)
