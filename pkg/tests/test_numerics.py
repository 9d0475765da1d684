import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothlab.errors import ConfigurationError, InvalidInputError, ShapeMismatchError
from smoothlab.losses import LossKind, loss_and_grad_from_logits
from smoothlab.numerics import (
    Rng,
    finite_diff_grad,
    matmul,
    relative_grad_error,
    seeded_init,
    softmax,
    tensor2,
)


class TestMatmul:
    def test_identity(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 5))
        assert np.array_equal(matmul(np.eye(3), a), a)

    def test_hand_product(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[1.0], [1.0]])
        assert np.array_equal(matmul(a, b), [[3.0], [7.0]])

    def test_against_triple_loop_oracle(self):
        rng = np.random.default_rng(42)
        a = rng.normal(size=(5, 7))
        b = rng.normal(size=(7, 2))
        expected = np.zeros((5, 2))
        for i in range(5):
            for j in range(2):
                for k in range(7):
                    expected[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(matmul(a, b), expected, atol=1e-12)

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeMismatchError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_associativity(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.normal(size=(4, 6))
            b = rng.normal(size=(6, 3))
            c = rng.normal(size=(3, 5))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert relative_grad_error(left, right) < 1e-9


class TestSoftmax:
    def test_uniform_on_equal_scores(self):
        np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1 / 3), atol=1e-15)

    def test_no_overflow_on_large_scores(self):
        out = softmax(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(out))
        assert out[0] > 1 - 1e-12 and out[1] < 1e-12

    def test_against_exp_normalize_oracle(self):
        v = np.array([1.0, 2.0, 3.0])
        e = np.exp(v)
        np.testing.assert_allclose(softmax(v), e / e.sum(), atol=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(InvalidInputError):
            softmax(np.array([0.0, np.nan]))

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=8),
           st.floats(-30, 30))
    @settings(max_examples=200)
    def test_sums_to_one_and_shift_invariant(self, values, shift):
        v = np.array(values)
        out = softmax(v)
        assert abs(out.sum() - 1.0) <= 1e-12
        assert np.all(out > 0)
        np.testing.assert_allclose(out, softmax(v + shift), atol=1e-12)


class TestRngAndInit:
    def test_equal_seeds_equal_streams(self):
        a = Rng(99).uniform(0, 1, 10_000)
        b = Rng(99).uniform(0, 1, 10_000)
        assert np.array_equal(a, b)

    def test_same_seed_same_tensor(self):
        t1 = seeded_init((4, 5), -0.5, 0.5, Rng(3))
        t2 = seeded_init((4, 5), -0.5, 0.5, Rng(3))
        assert np.array_equal(t1, t2)

    def test_draw_count(self):
        rng = Rng(1)
        seeded_init((2, 3), 0.0, 1.0, rng)
        assert rng.n_drawn == 6
        # the stream continues exactly where 6 manual draws would leave it
        fresh = Rng(1)
        fresh.uniform(0.0, 1.0, 6)
        assert np.array_equal(rng.uniform(0.0, 1.0, 4), fresh.uniform(0.0, 1.0, 4))

    def test_law_of_large_numbers(self):
        draws = Rng(5).uniform(-0.1, 0.1, 100_000)
        assert abs(draws.mean()) < 0.005
        assert draws.min() >= -0.1 and draws.max() < 0.1

    def test_bad_range_rejected(self):
        with pytest.raises(ConfigurationError):
            seeded_init((2, 2), 1.0, 1.0, Rng(0))

    def test_negative_seed_rejected(self):
        with pytest.raises(ConfigurationError):
            Rng(-1)


class TestFiniteDiff:
    def test_sum_of_squares(self):
        x = np.random.default_rng(0).normal(size=(3, 4))
        grad = finite_diff_grad(lambda t: float((t**2).sum()), x.copy())
        np.testing.assert_allclose(grad, 2 * x, atol=1e-6)

    def test_constant_function(self):
        grad = finite_diff_grad(lambda t: 1.5, np.ones((2, 2)))
        assert np.array_equal(grad, np.zeros((2, 2)))

    def test_matches_analytic_softmax_ce_gradient(self):
        rng = np.random.default_rng(11)
        target = rng.dirichlet(np.ones(5))
        logits = rng.normal(size=5)

        def f(x):
            return loss_and_grad_from_logits(target, x, LossKind.CROSS_ENTROPY)[0].value

        numeric = finite_diff_grad(f, logits.copy())
        _, analytic = loss_and_grad_from_logits(target, logits, LossKind.CROSS_ENTROPY)
        assert relative_grad_error(analytic, numeric) < 1e-6

    def test_nonfinite_value_propagates(self):
        with pytest.raises(InvalidInputError):
            finite_diff_grad(lambda t: float("nan"), np.ones((1, 1)))

    def test_bad_eps_rejected(self):
        with pytest.raises(ConfigurationError):
            finite_diff_grad(lambda t: 0.0, np.ones((1, 1)), eps=0.0)


class TestTensor2:
    def test_rejects_non_2d(self):
        with pytest.raises(ShapeMismatchError):
            tensor2(np.zeros(3))

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            tensor2([[1.0, np.inf]])

    def test_row_major_float64(self):
        t = tensor2([[1, 2], [3, 4]])
        assert t.dtype == np.float64 and t.flags["C_CONTIGUOUS"]
