# memlab/tests/test_autodiff.py
import numpy as np
import pytest

from core import autodiff as ad
from core.autodiff import Tensor, backward, finite_diff_check, get_tape, make_op, no_grad, tape_scope
from core.exceptions import ArgumentError, DomainError, ShapeError


class TestActivations:
    def test_fixed_points(self):
        assert ad.sigmoid(Tensor(0.0)).item() == 0.5
        assert ad.tanh(Tensor(0.0)).item() == 0.0
        assert ad.relu(Tensor(-3.0)).item() == 0.0

    def test_softplus_value(self):
        np.testing.assert_allclose(ad.softplus(Tensor(2.0)).item(), np.log1p(np.exp(2.0)), rtol=1e-14)
        assert abs(ad.softplus(Tensor(2.0)).item() - 2.126928) < 1e-6

    def test_ranges(self, rng):
        x = Tensor(rng.normal(0, 5, size=100))
        s, t, r, p = ad.sigmoid(x).data, ad.tanh(x).data, ad.relu(x).data, ad.softplus(x).data
        assert np.all((s > 0) & (s < 1))
        assert np.all((t > -1) & (t < 1))
        assert np.all(r >= 0)
        assert np.all(p > 0)

    def test_non_finite_input(self):
        with pytest.raises(DomainError):
            ad.sigmoid(Tensor([0.0, np.nan]))

    def test_unknown_kind(self):
        with pytest.raises(ArgumentError):
            ad.apply_activation('gelu', Tensor(1.0))

    @pytest.mark.parametrize('kind', ['sigmoid', 'tanh', 'softplus'])
    def test_gradients(self, kind, rng):
        x = Tensor(rng.normal(size=6))
        report = finite_diff_check(lambda t: ad.apply_activation(kind, t).sum(), x)
        assert report.max_rel_error < 1e-6


class TestMatmul:
    def test_identity(self, rng):
        M = rng.normal(size=(3, 3))
        np.testing.assert_allclose(ad.matmul(Tensor(np.eye(3)), Tensor(M)).data, M)

    def test_hand_product(self):
        out = ad.matmul(Tensor([[1, 2], [3, 4]]), Tensor([[0], [1]]))
        np.testing.assert_array_equal(out.data, [[2], [4]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_grad_check(self, rng):
        a = Tensor(rng.normal(size=(4, 3)))
        b = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
        w = rng.normal(size=(4, 2))
        report_a = finite_diff_check(lambda t: (ad.matmul(t, b) * w).sum(), a)
        report_b = finite_diff_check(lambda t: (ad.matmul(a, t) * w).sum(), Tensor(b.data.copy()))
        assert report_a.max_rel_error < 1e-6
        assert report_b.max_rel_error < 1e-6


class TestSoftmaxWithStrength:
    def test_zero_beta_is_uniform(self, rng):
        out = ad.softmax_with_strength(Tensor(rng.normal(size=4)), 0.0)
        np.testing.assert_allclose(out.data, [0.25] * 4)

    def test_symmetric_scores(self):
        out = ad.softmax_with_strength(Tensor([1.0, 1.0, 1.0]), 7.0)
        np.testing.assert_allclose(out.data, [1 / 3] * 3)

    def test_saturation(self):
        out = ad.softmax_with_strength(Tensor([1.0, 0.0]), 100.0)
        assert out.data[0] > 1 - 1e-12

    def test_sums_to_one_under_large_logits(self, rng):
        out = ad.softmax_with_strength(Tensor(rng.normal(0, 1e3, size=50)), 3.0)
        assert abs(out.data.sum() - 1.0) < 1e-12
        assert np.all(out.data >= 0)

    def test_empty(self):
        with pytest.raises(ArgumentError):
            ad.softmax_with_strength(Tensor(np.zeros(0)), 1.0)

    def test_negative_beta(self):
        with pytest.raises(ArgumentError):
            ad.softmax_with_strength(Tensor([1.0, 2.0]), -1.0)


class TestCosineSimilarity:
    def test_self_similarity(self, rng):
        u = rng.normal(size=5)
        value, degenerate = ad.cosine_similarity(Tensor(u), Tensor(u))
        np.testing.assert_allclose(value.item(), 1.0, atol=1e-12)
        assert not degenerate.any()

    def test_orthogonal_and_scaled(self):
        assert ad.cosine_similarity(Tensor([1.0, 0.0]), Tensor([0.0, 1.0]))[0].item() == 0.0
        np.testing.assert_allclose(ad.cosine_similarity(Tensor([1.0, 2.0]), Tensor([2.0, 4.0]))[0].item(), 1.0)

    def test_zero_norm_flags_degenerate(self):
        value, degenerate = ad.cosine_similarity(Tensor([0.0, 0.0]), Tensor([1.0, 2.0]))
        assert value.item() == 0.0
        assert degenerate.all()

    def test_broadcast_rows(self, rng):
        M = rng.normal(size=(6, 4))
        values, _ = ad.cosine_similarity(Tensor(M), Tensor(M[2]))
        assert values.shape == (6,)
        np.testing.assert_allclose(values.data[2], 1.0, atol=1e-12)


class TestBackward:
    def test_linear_functional(self, rng):
        x = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
        with tape_scope():
            backward(x.sum())
        np.testing.assert_array_equal(x.grad, np.ones((3, 2)))

    def test_quadratic(self, rng):
        x = Tensor(rng.normal(size=4), requires_grad=True)
        with tape_scope():
            backward((x * x).sum())
        np.testing.assert_allclose(x.grad, 2 * x.data)

    def test_non_scalar_loss(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with tape_scope():
            with pytest.raises(ArgumentError):
                backward(x * 2.0)

    def test_shared_parent_accumulates(self):
        x = Tensor(3.0, requires_grad=True)
        with tape_scope():
            y = x * x + x
            backward(y)
        assert x.grad == pytest.approx(7.0)

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with tape_scope() as tape:
            with no_grad():
                y = ad.exp(x).sum()
            assert len(tape) == 0
            assert not y.requires_grad

    def test_tapes_are_scoped(self):
        x = Tensor(2.0, requires_grad=True)
        with tape_scope() as outer:
            (x * 2.0).sum()
            with tape_scope() as inner:
                (x * 3.0).sum()
            assert len(inner) == 2
            assert len(outer) == 2

    def test_nothing_recorded_outside_a_scope(self):
        x = Tensor(np.ones(3), requires_grad=True)
        for _ in range(3):
            y = ad.exp(x * 2.0).sum()
        assert get_tape() is None
        assert not y.requires_grad
        with tape_scope() as tape:
            backward(ad.exp(x * 2.0).sum())
        assert len(tape) == 3
        assert get_tape() is None
        np.testing.assert_allclose(x.grad, 2.0 * np.exp(2.0) * np.ones(3))


class TestOps:
    def test_cumprod_exclusive_with_zeros(self):
        x = Tensor([0.5, 0.0, 0.9, 0.2])
        np.testing.assert_allclose(ad.cumprod_exclusive(x).data, [1.0, 0.5, 0.0, 0.0])
        report = finite_diff_check(lambda t: (ad.cumprod_exclusive(t) * np.arange(1, 5)).sum(), x)
        assert report.max_rel_error < 1e-6

    def test_max_routes_to_first_argmax(self):
        x = Tensor([1.0, 3.0, 3.0], requires_grad=True)
        with tape_scope():
            backward(ad.tmax(x))
        np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])

    def test_log_of_nonpositive(self):
        with pytest.raises(DomainError):
            ad.log(Tensor([1.0, 0.0]))

    def test_non_finite_forward(self):
        with pytest.raises(DomainError):
            ad.div(Tensor(1.0), Tensor(0.0))

    @pytest.mark.parametrize('op', [
        lambda t: ad.logsumexp(t.reshape(2, 3), axis=1).sum(),
        lambda t: (ad.log_softmax(t) * np.arange(6)).sum(),
        lambda t: (ad.roll(t, 2) * np.arange(6)).sum(),
        lambda t: (ad.concat([t[:2], t[3:]]) ** 2).sum(),
        lambda t: (ad.stack([t, t * 2.0], axis=0).mean(axis=0) ** 2).sum(),
        lambda t: (ad.permute_last(t, np.array([5, 4, 3, 2, 1, 0])) * np.arange(6)).sum(),
        lambda t: ad.norm(t),
    ])
    def test_gradients(self, op, rng):
        report = finite_diff_check(op, Tensor(rng.normal(size=6)))
        assert report.max_rel_error < 1e-6


class TestFiniteDiffCheck:
    def test_identity_sum(self, rng):
        report = finite_diff_check(lambda t: t.sum(), Tensor(rng.normal(size=7)))
        assert report.max_rel_error < 1e-10
        assert report.passed

    def test_softmax_cross_entropy(self, rng):
        target = np.eye(5)[2]

        def loss(t):
            return -(ad.log_softmax(t) * target).sum()

        x = Tensor(rng.normal(size=5))
        for eps in (1e-5, 1e-6):
            assert finite_diff_check(loss, x, eps=eps).max_rel_error < 1e-6

    def test_wrong_hand_gradient_is_caught(self, rng):
        def bad_square(t):
            # derivative deliberately off by a factor of 3
            return make_op(t.data ** 2, (t,), lambda g: (g * 6.0 * t.data,), 'bad_square').sum()

        report = finite_diff_check(bad_square, Tensor(rng.uniform(0.5, 1.5, size=4)))
        assert report.max_rel_error > 1e-2
        assert not report.passed

    def test_bad_eps(self):
        with pytest.raises(ArgumentError):
            finite_diff_check(lambda t: t.sum(), Tensor(np.ones(2)), eps=0.0)
